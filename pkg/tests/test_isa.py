"""Assembler, emulator, sieve program and Turing-machine emulation."""

import numpy as np
import pytest

from mechlogic.isa import (
    AssemblyError,
    EmulationError,
    Instruction,
    MachineState,
    MemoryImage,
    assemble,
    clock_cycles_of,
    disassemble,
    emulate_step,
    program_size,
    reference_sieve,
    run_until_halt,
    sieve_program,
    trace_csv,
)
from mechlogic.utm import (
    A_OUT,
    A_TRANS,
    MMR_ADDRESS,
    MmrTapeDevice,
    Tape,
    UtmError,
    UtmSpec,
    run_utm_emulation,
    utm_reference_step,
)


def step_bytes(image_bytes, state=None):
    mem = MemoryImage(image_bytes)
    s = state or MachineState()
    return emulate_step(s, mem) + (mem,)


# ---------------------------------------------------------------------------
# assembler


def test_ldnx_encoding():
    img = assemble("LDNX_AB 7")
    assert bytes(img.data[:2]) == bytes([0x06, 0x07])


def test_empty_program_is_all_zero():
    img = assemble("; nothing\n")
    assert bytes(img.data) == bytes(256)


def test_forward_label_resolves():
    img = assemble("""
        LDNX_AB target
        COPY_AC
        JMP_C
target: .byte 9
    """)
    assert img.data[1] == 4  # target address


def test_label_redefinition_rejected():
    with pytest.raises(AssemblyError):
        assemble("x: SWAP_AB\nx: SWAP_AB\n")


def test_unknown_mnemonic_rejected():
    with pytest.raises(AssemblyError):
        assemble("FROB_Z\n")


def test_skip_before_ldnx_rejected():
    with pytest.raises(AssemblyError):
        assemble("SKPNX_OVER\nLDNX_AB 3\n")


def test_operand_arity_checked():
    with pytest.raises(AssemblyError):
        assemble("LDNX_AB\n")
    with pytest.raises(AssemblyError):
        assemble("SWAP_AB 3\n")


def test_disassemble_round_trip_random_images():
    rng = np.random.default_rng(11)
    for _ in range(40):
        n = int(rng.integers(1, 60))
        body = []
        while len(body) < n:
            op = Instruction(int(rng.integers(0, 16)))
            if op in (Instruction.SKPNX_A_GRT_B, Instruction.SKPNX_A_DIF_B,
                      Instruction.SKPNX_OVER) and len(body) + 2 >= n:
                continue
            body.append(int(op))
            if op == Instruction.LDNX_AB:
                body.append(int(rng.integers(0, 256)))
            elif op in (Instruction.SKPNX_A_GRT_B, Instruction.SKPNX_A_DIF_B,
                        Instruction.SKPNX_OVER):
                # keep the byte after a skip a non-LDNX opcode
                body.append(int(Instruction.SWAP_AB))
        if body[-1] == int(Instruction.LDNX_AB):
            body.append(0)
        img = MemoryImage(bytes(body))
        text = disassemble(img, length=len(body))
        img2 = assemble(text)
        assert bytes(img2.data[:len(body)]) == bytes(body)


# ---------------------------------------------------------------------------
# emulator semantics


def test_swap_and_copy():
    s = MachineState(a=1, c=2)
    s2, _, _ = step_bytes([int(Instruction.SWAP_AC)], s)
    assert (s2.a, s2.c) == (2, 1)
    s = MachineState(a=7, c=9)
    s2, _, _ = step_bytes([int(Instruction.COPY_AC)], s)
    assert (s2.a, s2.c) == (7, 7)
    s = MachineState(b=3, d=8)
    s2, _, _ = step_bytes([int(Instruction.SWAP_BD)], s)
    assert (s2.b, s2.d) == (8, 3)


def test_add_with_overflow():
    s = MachineState(a=200, b=56)
    s2, _, _ = step_bytes([int(Instruction.APLUSB_TO_D)], s)
    assert s2.d == 0 and s2.overflow == 1
    s = MachineState(a=200, b=55)
    s2, _, _ = step_bytes([int(Instruction.APLUSB_TO_D)], s)
    assert s2.d == 255 and s2.overflow == 0


def test_shifts():
    s = MachineState(d=0b10000010)
    s2, _, _ = step_bytes([int(Instruction.RSA_D)], s)
    assert s2.d == 0b11000001
    s2, _, _ = step_bytes([int(Instruction.RSL_D)], s)
    assert s2.d == 0b01000001


def test_nor_and_not():
    s = MachineState(a=0b1100, b=0b1010)
    s2, _, _ = step_bytes([int(Instruction.ANORB_TO_C)], s)
    assert s2.c == (~0b1110) & 0xFF
    s = MachineState(c=0x0F)
    s2, _, _ = step_bytes([int(Instruction.NOT_C)], s)
    assert s2.c == 0xF0


def test_load_save_ldnx():
    mem = MemoryImage(bytes([int(Instruction.LOAD_AB)]) + bytes(19) + bytes([42]))
    s, w = emulate_step(MachineState(a=20), mem)
    assert s.b == 42 and w is None
    mem = MemoryImage(bytes([int(Instruction.SAVE_AB)]))
    s, w = emulate_step(MachineState(a=9, b=30), mem)
    assert mem.data[30] == 9 and w == (30, 9)
    assert (s.write_addr, s.write_data) == (30, 9)
    mem = MemoryImage(bytes([int(Instruction.LDNX_AB), 77]))
    s, _ = emulate_step(MachineState(), mem)
    assert s.a == 77 and s.pc == 2


def test_skips_jump_two():
    for op, state, taken in [
        (Instruction.SKPNX_A_GRT_B, MachineState(a=5, b=3), True),
        (Instruction.SKPNX_A_GRT_B, MachineState(a=3, b=5), False),
        (Instruction.SKPNX_A_DIF_B, MachineState(a=5, b=3), True),
        (Instruction.SKPNX_A_DIF_B, MachineState(a=5, b=5), False),
        (Instruction.SKPNX_OVER, MachineState(overflow=1), True),
        (Instruction.SKPNX_OVER, MachineState(overflow=0), False),
    ]:
        s, _, _ = step_bytes([int(op)], state)
        assert s.pc == (2 if taken else 1), op


def test_overflow_changed_only_by_add():
    rng = np.random.default_rng(5)
    for opcode in Instruction:
        if opcode in (Instruction.APLUSB_TO_D, Instruction.LDNX_AB):
            continue
        s = MachineState(a=int(rng.integers(256)), b=int(rng.integers(256)),
                         c=3, d=4, overflow=1)
        s2, _, _ = step_bytes([int(opcode)], s)
        assert s2.overflow == 1, opcode


def test_invalid_opcode_faults_with_pc():
    mem = MemoryImage(bytes([0x30]))
    with pytest.raises(EmulationError) as ei:
        emulate_step(MachineState(), mem)
    assert ei.value.pc == 0


def test_totality_over_all_opcodes_and_random_state():
    rng = np.random.default_rng(3)
    for opcode in Instruction:
        for _ in range(16):
            body = [int(opcode), int(rng.integers(256))]
            s = MachineState(a=int(rng.integers(256)), b=int(rng.integers(256)),
                             c=int(rng.integers(256)), d=int(rng.integers(256)),
                             overflow=int(rng.integers(2)))
            s2, _, _ = step_bytes(body, s)
            assert isinstance(s2, MachineState)


def test_halt_on_self_jump():
    img = assemble("here: LDNX_AB here2\n COPY_AC\nhere2: JMP_C\n")
    # LDNX[0,1] COPY[2] JMP at 3; C = 3 -> self
    mem, cycles, trace = run_until_halt(img, 100)
    assert cycles == 3
    assert trace[-1].state.halted


def test_zero_cycle_bound_rejected():
    with pytest.raises(EmulationError):
        run_until_halt(MemoryImage(), 0)


def test_bound_exceeded_reports():
    img = assemble("loop: LDNX_AB loop\n COPY_AC\n JMP_C\n")
    # jumps back to 0 forever (C = 0 != pc of JMP at 3)
    with pytest.raises(EmulationError):
        run_until_halt(img, 50)


def test_trace_csv_shape():
    img = assemble("LDNX_AB 4\n SWAP_AB\n LDNX_AB 9\n SAVE_AB\nh: LDNX_AB h2\n COPY_AC\nh2: JMP_C\n")
    _, _, trace = run_until_halt(img, 100)
    text = trace_csv(trace)
    assert text.splitlines()[0] == "cycle,pc,opcode,A,B,C,D,overflow,write_addr,write_data"
    assert any(",SAVE_AB," in line for line in text.splitlines())


# ---------------------------------------------------------------------------
# memory image


def test_hex_dump_round_trip():
    rng = np.random.default_rng(2)
    img = MemoryImage(bytes(rng.integers(0, 256, 256, dtype=np.uint8)))
    assert MemoryImage.from_hex_dump(img.hex_dump()).data == img.data
    assert len(img.hex_dump().splitlines()) == 16


def test_mmr_redirects():
    class Dev:
        def __init__(self):
            self.vals = []
        def read(self):
            return 9
        def write(self, v):
            self.vals.append(v)
    dev = Dev()
    mem = MemoryImage(mmr_address=40, device=dev)
    mem.write(40, 7)
    assert dev.vals == [7] and mem.data[40] == 0
    assert mem.read(40) == 9


# ---------------------------------------------------------------------------
# sieve


def test_sieve_marks_match_reference():
    img = assemble(sieve_program(32, 128))
    mem, cycles, trace = run_until_halt(img, 2000)
    ref = reference_sieve(32)
    for n in range(2, 32):
        assert (mem.data[128 + n] != 0) == ref[n], n
    assert cycles <= 2000


def test_sieve_small_case():
    img = assemble(sieve_program(4, 128))
    mem, _, _ = run_until_halt(img, 2000)
    # only 2 and 3 lie in [2, 4); both prime, nothing marked
    assert mem.data[128 + 2] == 0 and mem.data[128 + 3] == 0


def test_sieve_program_size_within_budget():
    img = assemble(sieve_program(32, 128))
    assert program_size(img) <= 64


def test_sieve_clock_cycle_budget():
    img = assemble(sieve_program(32, 128))
    _, instructions, trace = run_until_halt(img, 2000)
    clocks = sum(clock_cycles_of(r.opcode) for r in trace)
    assert instructions <= 2000
    assert clocks <= 2000


# ---------------------------------------------------------------------------
# UTM


def test_table_addressing():
    spec = UtmSpec.stationary()
    # state p0 reading symbol s2 consults a_out + 0*5 + 2
    assert spec.state_code(0) + 2 == A_OUT + 2
    out = spec.output_table()
    assert out[0 * 5 + 2] & 0x07 == 2  # stationary writes what it reads
    assert A_TRANS - A_OUT == 25


def test_stationary_machine_leaves_tape_unchanged():
    tape = Tape({0: 3, 1: 1, 2: 4, 3: 2})
    before = tape.snapshot()
    tape2, state, _ = run_utm_emulation(UtmSpec.stationary(), tape, steps=50)
    assert tape2.snapshot() == before
    assert state == 0


def test_bad_symbol_write_faults():
    dev = MmrTapeDevice(Tape())
    with pytest.raises(UtmError):
        dev.write(0x07)  # symbol code 7 invalid


def test_emulated_utm_matches_reference_10k_steps():
    rng = np.random.default_rng(123)
    for trial in range(3):
        spec = UtmSpec.random(rng)
        init = {i: int(rng.integers(0, 5)) for i in range(-5, 6)}
        steps = 10000 if trial == 0 else 2000
        ref_tape = Tape(dict(init))
        state = 0
        for _ in range(steps):
            state = utm_reference_step(spec, ref_tape, state)
        emu_tape = Tape(dict(init))
        emu_tape2, emu_state, _ = run_utm_emulation(spec, emu_tape, steps=steps)
        assert emu_tape2.snapshot() == ref_tape.snapshot()
        assert emu_tape2.head == ref_tape.head
        assert emu_state == state

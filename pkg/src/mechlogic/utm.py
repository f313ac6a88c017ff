"""Universal Turing machine emulation through a memory-mapped register.

A 5-state, 5-symbol machine is encoded as two 25-byte tables: the output
table holds, per (state, symbol), a byte with the written symbol in bits
0-2 and the move direction in bit 3 (0 = left, 1 = right); the transition
table holds the next state's code.  States are coded as a_out + 5*i so the
code itself addresses the tables: entry address = state_code + symbol.

The processor reaches the tape through one memory-mapped address: reading
it returns the symbol under the head, writing it stores the symbol bits
and then moves the head.  The emulation loop reads the symbol, adds the
state code, fetches and writes back the output entry, offsets into the
transition table for the next state code, and jumps back.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .isa import Instruction, MachineState, MemoryImage, assemble, emulate_step

N_STATES = 5
N_SYMBOLS = 5
A_OUT = 64            # base of the output table
A_TRANS = A_OUT + 25  # transition table sits right after (delta = 25)
MMR_ADDRESS = 255


class UtmError(ValueError):
    pass


@dataclass(frozen=True)
class UtmSpec:
    """Transition rules: per (state i, symbol j), what to write, where to
    move (+1/-1) and the next state index."""

    write: tuple      # 25 symbols, row-major [i * 5 + j]
    move: tuple       # 25 entries of +1 / -1
    next_state: tuple # 25 state indices

    def __post_init__(self):
        for name, vals in (("write", self.write), ("move", self.move),
                           ("next_state", self.next_state)):
            if len(vals) != N_STATES * N_SYMBOLS:
                raise UtmError(f"{name} table must have 25 entries")
        if any(not 0 <= w < N_SYMBOLS for w in self.write):
            raise UtmError("written symbols must be in [0, 5)")
        if any(m not in (-1, 1) for m in self.move):
            raise UtmError("moves must be +1 or -1")
        if any(not 0 <= s < N_STATES for s in self.next_state):
            raise UtmError("next states must be in [0, 5)")

    def state_code(self, i: int) -> int:
        return A_OUT + N_SYMBOLS * i

    def output_table(self) -> bytes:
        return bytes(self.write[k] | ((1 if self.move[k] > 0 else 0) << 3)
                     for k in range(25))

    def transition_table(self) -> bytes:
        return bytes(self.state_code(self.next_state[k]) for k in range(25))

    @classmethod
    def random(cls, rng) -> "UtmSpec":
        return cls(write=tuple(int(rng.integers(0, N_SYMBOLS)) for _ in range(25)),
                   move=tuple(int(rng.choice((-1, 1))) for _ in range(25)),
                   next_state=tuple(int(rng.integers(0, N_STATES)) for _ in range(25)))

    @classmethod
    def stationary(cls) -> "UtmSpec":
        """Writes what it reads, never changes state, always moves right."""
        return cls(write=tuple(k % N_SYMBOLS for k in range(25)),
                   move=(1,) * 25,
                   next_state=tuple(k // N_SYMBOLS for k in range(25)))


class Tape:
    """Unbounded two-way tape of symbols, blank = 0."""

    def __init__(self, contents=None):
        self.cells = dict(contents or {})
        self.head = 0

    def read(self) -> int:
        return self.cells.get(self.head, 0)

    def write_symbol(self, sym: int) -> None:
        if not 0 <= sym < N_SYMBOLS:
            raise UtmError(f"symbol code {sym} out of range")
        self.cells[self.head] = sym

    def move(self, direction: int) -> None:
        self.head += 1 if direction > 0 else -1

    def snapshot(self) -> dict:
        return {k: v for k, v in self.cells.items() if v != 0}


def utm_reference_step(spec: UtmSpec, tape: Tape, state: int) -> int:
    """One direct-interpretation step; mutates the tape, returns next state."""
    j = tape.read()
    k = state * N_SYMBOLS + j
    tape.write_symbol(spec.write[k])
    tape.move(spec.move[k])
    return spec.next_state[k]


class MmrTapeDevice:
    """The memory-mapped register bridging the processor to the tape.

    Reads return the symbol under the head; a write stores the low three
    bits as the symbol (codes 5-7 are faults) and then moves the head per
    bit 3.  Each write is one Turing step; writes are counted.
    """

    def __init__(self, tape: Tape):
        self.tape = tape
        self.writes = 0

    def read(self) -> int:
        return self.tape.read()

    def write(self, value: int) -> None:
        sym = value & 0x07
        if sym >= N_SYMBOLS:
            raise UtmError(f"written symbol code {sym} out of range")
        self.tape.write_symbol(sym)
        self.tape.move(+1 if (value >> 3) & 1 else -1)
        self.writes += 1


def utm_emulator_program(spec: UtmSpec, initial_state: int = 0) -> str:
    """Assembly for the Appendix-style emulation loop plus both tables.

    The loop: read the MMR into a register, add the state code to form the
    output-table address, fetch that entry and store it back to the MMR
    (which writes the symbol and moves the head), add the table offset,
    fetch the next state code, jump back.
    """
    out = spec.output_table()
    trans = spec.transition_table()
    pad = A_OUT - 33  # loop is 33 bytes; tables start at a_out
    if pad < 0:
        raise UtmError("program leaks into the table region")
    table_bytes = ",".join(str(v) for v in out + trans)
    return f"""\
; universal Turing machine emulation via the memory-mapped tape register
start:  LDNX_AB {spec.state_code(initial_state)}
        SWAP_AB
        SWAP_BD             ; D = current state code
loop:   LDNX_AB {MMR_ADDRESS}
        LOAD_AB             ; B = symbol under the head
        SWAP_AB
        SWAP_BD
        APLUSB_TO_D         ; D = state code + symbol = output entry address
        SWAP_BD
        SWAP_AB
        LOAD_AB             ; B = output entry (symbol | direction)
        SWAP_AB
        SWAP_AC
        LDNX_AB {MMR_ADDRESS}
        SWAP_AB
        SWAP_AC
        SAVE_AB             ; write the entry to the MMR: writes + moves
        SWAP_AC
        SWAP_AB
        LDNX_AB {A_TRANS - A_OUT}
        APLUSB_TO_D         ; D = transition entry address
        SWAP_BD
        SWAP_AB
        LOAD_AB             ; B = next state code
        SWAP_BD             ; D = next state code
        LDNX_AB loop
        COPY_AC
        JMP_C
{chr(10).join('        .byte 0' for _ in range(pad))}
tables: .byte {table_bytes}
"""


def build_utm_image(spec: UtmSpec, tape: Tape, initial_state: int = 0) -> MemoryImage:
    image = assemble(utm_emulator_program(spec, initial_state))
    device = MmrTapeDevice(tape)
    return MemoryImage(bytes(image.data), mmr_address=MMR_ADDRESS, device=device)


def run_utm_emulation(spec: UtmSpec, tape: Tape, steps: int,
                      initial_state: int = 0, max_instructions=None):
    """Drive the processor-level emulation for ``steps`` Turing steps.

    Returns (tape, final state index, instructions executed).
    """
    memory = build_utm_image(spec, tape, initial_state)
    device = memory.device
    s = MachineState()
    budget = max_instructions if max_instructions is not None else 40 * steps + 100
    n = 0
    while device.writes < steps:
        if n >= budget:
            raise UtmError(f"emulation exceeded {budget} instructions")
        s, _ = emulate_step(s, memory)
        n += 1
    # drain the tail of the loop so D holds the *next* state code
    while memory.read(s.pc) != Instruction.JMP_C or s.c == s.pc:
        s, _ = emulate_step(s, memory)
        n += 1
    s, _ = emulate_step(s, memory)
    n += 1
    code = s.d
    if (code - A_OUT) % N_SYMBOLS or not 0 <= (code - A_OUT) // N_SYMBOLS < N_STATES:
        raise UtmError(f"register does not hold a valid state code: {code}")
    return tape, (code - A_OUT) // N_SYMBOLS, n

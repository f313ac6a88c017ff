"""Instruction set, assembler and cycle-accurate emulator.

Sixteen one-byte instructions; the opcode is the low nibble (encoded in the
declaration order below) and the high nibble must be zero.  LDNX_AB is the
single two-byte form: it consumes the following byte as a literal.  A taken
skip advances the program counter by two, so a skip must never be placed
directly before an LDNX_AB (the assembler rejects that layout).  Execution
halts when JMP_C targets the address of the jump itself.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace


class Instruction(enum.IntEnum):
    SWAP_AC = 0
    SWAP_BD = 1
    SWAP_AB = 2
    COPY_AC = 3
    SAVE_AB = 4
    LOAD_AB = 5
    LDNX_AB = 6
    SKPNX_A_GRT_B = 7
    SKPNX_A_DIF_B = 8
    SKPNX_OVER = 9
    JMP_C = 10
    NOT_C = 11
    ANORB_TO_C = 12
    APLUSB_TO_D = 13
    RSL_D = 14
    RSA_D = 15


SKIP_OPS = (Instruction.SKPNX_A_GRT_B, Instruction.SKPNX_A_DIF_B,
            Instruction.SKPNX_OVER)


class AssemblyError(ValueError):
    pass


class EmulationError(RuntimeError):
    def __init__(self, message, pc=None):
        super().__init__(message)
        self.pc = pc


class MemoryImage:
    """256 bytes of memory, optionally with one memory-mapped register.

    Reads and writes to the MMR address are redirected to the attached
    device (``device.read() -> int`` and ``device.write(value)``).
    """

    def __init__(self, data=None, mmr_address=None, device=None):
        self.data = bytearray(256)
        if data is not None:
            b = bytes(data)
            if len(b) > 256:
                raise ValueError("image larger than 256 bytes")
            self.data[: len(b)] = b
        self.mmr_address = mmr_address
        self.device = device
        if (mmr_address is None) != (device is None):
            raise ValueError("mmr_address and device must be given together")

    def read(self, addr: int) -> int:
        addr &= 0xFF
        if addr == self.mmr_address:
            return self.device.read() & 0xFF
        return self.data[addr]

    def write(self, addr: int, value: int) -> None:
        addr &= 0xFF
        value &= 0xFF
        if addr == self.mmr_address:
            self.device.write(value)
        else:
            self.data[addr] = value

    def copy(self) -> "MemoryImage":
        return MemoryImage(bytes(self.data), self.mmr_address, self.device)

    def hex_dump(self) -> str:
        lines = []
        for row in range(16):
            chunk = self.data[16 * row: 16 * row + 16]
            lines.append(" ".join(f"{b:02x}" for b in chunk))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_hex_dump(cls, text: str) -> "MemoryImage":
        data = bytes(int(tok, 16) for tok in text.split())
        return cls(data)


@dataclass(frozen=True)
class MachineState:
    a: int = 0
    b: int = 0
    c: int = 0
    d: int = 0
    pc: int = 0
    write_addr: int = 0
    write_data: int = 0
    overflow: int = 0
    halted: bool = False

    def registers(self):
        return dict(A=self.a, B=self.b, C=self.c, D=self.d, pc=self.pc,
                    write_addr=self.write_addr, write_data=self.write_data,
                    overflow=self.overflow)


@dataclass(frozen=True)
class StepRecord:
    cycle: int
    pc: int
    opcode: Instruction
    state: MachineState
    write: tuple | None = None  # (addr, value) committed this step


def emulate_step(state: MachineState, memory: MemoryImage) -> tuple:
    """Execute one instruction; returns (new state, write-or-None).

    Semantics: fetch the byte at pc (high nibble must be zero); the default
    next pc is pc+1; LDNX_AB consumes the following byte and continues at
    pc+2; a taken skip continues at pc+2; SAVE_AB stores A at address B and
    pulses write-valid; JMP_C to the jump's own address halts.
    """
    if state.halted:
        return state, None
    byte = memory.read(state.pc)
    if byte & 0xF0:
        raise EmulationError(f"invalid opcode 0x{byte:02x} at pc={state.pc}",
                             pc=state.pc)
    op = Instruction(byte & 0x0F)
    s = state
    nxt = (s.pc + 1) & 0xFF
    write = None
    if op == Instruction.SWAP_AC:
        s = replace(s, a=s.c, c=s.a)
    elif op == Instruction.SWAP_BD:
        s = replace(s, b=s.d, d=s.b)
    elif op == Instruction.SWAP_AB:
        s = replace(s, a=s.b, b=s.a)
    elif op == Instruction.COPY_AC:
        s = replace(s, c=s.a)
    elif op == Instruction.SAVE_AB:
        memory.write(s.b, s.a)
        write = (s.b, s.a)
        s = replace(s, write_addr=s.b, write_data=s.a)
    elif op == Instruction.LOAD_AB:
        s = replace(s, b=memory.read(s.a))
    elif op == Instruction.LDNX_AB:
        s = replace(s, a=memory.read((s.pc + 1) & 0xFF))
        nxt = (s.pc + 2) & 0xFF
    elif op == Instruction.SKPNX_A_GRT_B:
        if s.a > s.b:
            nxt = (s.pc + 2) & 0xFF
    elif op == Instruction.SKPNX_A_DIF_B:
        if s.a != s.b:
            nxt = (s.pc + 2) & 0xFF
    elif op == Instruction.SKPNX_OVER:
        if s.overflow:
            nxt = (s.pc + 2) & 0xFF
    elif op == Instruction.JMP_C:
        if s.c == s.pc:
            return replace(s, halted=True), None
        nxt = s.c & 0xFF
    elif op == Instruction.NOT_C:
        s = replace(s, c=(~s.c) & 0xFF)
    elif op == Instruction.ANORB_TO_C:
        s = replace(s, c=(~(s.a | s.b)) & 0xFF)
    elif op == Instruction.APLUSB_TO_D:
        total = s.a + s.b
        s = replace(s, d=total & 0xFF, overflow=int(total > 0xFF))
    elif op == Instruction.RSL_D:
        s = replace(s, d=(s.d >> 1) & 0x7F)
    elif op == Instruction.RSA_D:
        s = replace(s, d=(s.d >> 1) | (s.d & 0x80))
    return replace(s, pc=nxt), write


def clock_cycles_of(op: Instruction) -> int:
    """Clock cycles the latch-level machine spends on one instruction."""
    return 2 if op in (Instruction.LDNX_AB, Instruction.LOAD_AB) else 1


def run_until_halt(memory: MemoryImage, max_cycles: int,
                   state: MachineState | None = None):
    """Step until the halt condition or the cycle bound.

    Returns (final memory, instruction count, trace of StepRecord).  The
    bound counts executed instructions; EmulationError when exceeded or
    zero.
    """
    if max_cycles <= 0:
        raise EmulationError("cycle bound must be positive")
    s = state or MachineState()
    trace = []
    for cycle in range(max_cycles):
        if s.halted:
            return memory, cycle, trace
        pc = s.pc
        op = Instruction(memory.read(pc) & 0x0F)
        s, write = emulate_step(s, memory)
        trace.append(StepRecord(cycle=cycle, pc=pc, opcode=op, state=s, write=write))
        if s.halted:
            return memory, cycle + 1, trace
    raise EmulationError(f"no halt within {max_cycles} cycles", pc=s.pc)


def trace_csv(trace) -> str:
    lines = ["cycle,pc,opcode,A,B,C,D,overflow,write_addr,write_data"]
    for r in trace:
        w = r.write or ("", "")
        lines.append(f"{r.cycle},{r.pc},{r.opcode.name},{r.state.a},{r.state.b},"
                     f"{r.state.c},{r.state.d},{r.state.overflow},{w[0]},{w[1]}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# assembler / disassembler

MNEMONICS = {op.name: op for op in Instruction}


def assemble(text: str) -> MemoryImage:
    """Two-pass assembler: mnemonics, ``label:`` definitions, ``.byte``
    literals, ``;`` comments.  LDNX_AB takes one operand (number or label).
    """
    lines = []
    for raw in text.splitlines():
        line = raw.split(";", 1)[0].strip()
        if line:
            lines.append(line)

    # pass 1: layout and labels
    labels = {}
    items = []  # (kind, payload)
    addr = 0
    for line in lines:
        while ":" in line:
            label, _, rest = line.partition(":")
            label = label.strip()
            if not label.isidentifier():
                raise AssemblyError(f"bad label {label!r}")
            if label in labels:
                raise AssemblyError(f"label {label!r} redefined")
            labels[label] = addr
            line = rest.strip()
        if not line:
            continue
        parts = line.split()
        mnem = parts[0].upper()
        if mnem == ".BYTE":
            for tok in " ".join(parts[1:]).split(","):
                items.append(("byte", tok.strip()))
                addr += 1
        elif mnem in MNEMONICS:
            op = MNEMONICS[mnem]
            if op == Instruction.LDNX_AB:
                if len(parts) != 2:
                    raise AssemblyError("LDNX_AB needs exactly one operand")
                items.append(("op", op))
                items.append(("byte", parts[1]))
                addr += 2
            else:
                if len(parts) != 1:
                    raise AssemblyError(f"{mnem} takes no operand")
                items.append(("op", op))
                addr += 1
        else:
            raise AssemblyError(f"unknown mnemonic {parts[0]!r}")
        if addr > 256:
            raise AssemblyError("program exceeds 256 bytes")

    # pass 2: emit
    def value_of(tok):
        if tok in labels:
            return labels[tok]
        try:
            v = int(tok, 0)
        except ValueError:
            raise AssemblyError(f"undefined label or bad literal {tok!r}") from None
        if not 0 <= v <= 255:
            raise AssemblyError(f"byte value {v} out of range")
        return v

    out = bytearray()
    prev_op = None
    for kind, payload in items:
        if kind == "op":
            if prev_op in SKIP_OPS and payload == Instruction.LDNX_AB:
                raise AssemblyError(
                    "LDNX_AB must not directly follow a skip (a taken skip "
                    "advances by one instruction byte only)")
            out.append(int(payload))
            prev_op = payload
        else:
            out.append(value_of(payload))
            if prev_op != Instruction.LDNX_AB:
                prev_op = None
            else:
                prev_op = None
    return MemoryImage(bytes(out))


def program_size(image: MemoryImage) -> int:
    """Bytes up to and including the last nonzero byte."""
    data = bytes(image.data)
    n = len(data)
    while n > 0 and data[n - 1] == 0:
        n -= 1
    return n


def disassemble(image: MemoryImage, length: int | None = None) -> str:
    """Linear-sweep disassembly; LDNX literals and high-nibble bytes become
    .byte lines.  Byte-level round trip: assemble(disassemble(m)) == m."""
    n = length if length is not None else program_size(image)
    out = []
    i = 0
    while i < n:
        byte = image.data[i]
        if byte & 0xF0:
            out.append(f".byte {byte}")
            i += 1
            continue
        op = Instruction(byte & 0x0F)
        if op == Instruction.LDNX_AB:
            lit = image.data[i + 1] if i + 1 < n else 0
            out.append(f"LDNX_AB {lit}")
            i += 2
        else:
            out.append(op.name)
            i += 1
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# the sieve program


def sieve_program(n_max: int = 32, array_base: int = 128) -> str:
    """Assembly for the sieve of Eratosthenes over [array_base,
    array_base + n_max).

    Cell ``array_base + n`` is left zero when n is prime and marked nonzero
    otherwise (0 and 1 are left zero; the half-open range resolves the
    published 128-160 span, which names one byte more than 32 numbers).
    Multiples of every candidate p up to floor(sqrt(n_max - 1)) are marked;
    composite candidates re-mark already-marked cells, which is redundant
    but harmless and keeps the program small.  Halting is the outer bound
    check's JMP_C jumping to itself.
    """
    if not 2 <= n_max <= 64:
        raise ValueError("n_max must be in [2, 64] for the 8-bit address map")
    if not 0 < array_base <= 256 - n_max:
        raise ValueError("array does not fit in memory")
    p_limit = int(math.isqrt(n_max - 1))
    return f"""\
; sieve of Eratosthenes: primality flags at [{array_base}, {array_base + n_max})
; cell P holds the current candidate; m walks its multiples in registers
start:      LDNX_AB P
            LOAD_AB             ; B = p
outer:      LDNX_AB halt        ; halt = the JMP below: self-jump ends the run
            COPY_AC
            LDNX_AB {p_limit + 1}
            SKPNX_A_GRT_B       ; continue while p <= {p_limit}
halt:       JMP_C
            LDNX_AB mark        ; preload the loop target before A carries m
            COPY_AC
            LDNX_AB P           ; m = 2p, kept in A through the mark loop
            LOAD_AB
            SWAP_BD
            LDNX_AB P
            LOAD_AB
            SWAP_AB
            SWAP_BD
            APLUSB_TO_D
            SWAP_BD
            SWAP_AB             ; A = 2p
mark:       SWAP_AB             ; B = m
            LDNX_AB {array_base}
            APLUSB_TO_D         ; D = base + m
            SWAP_BD
            SAVE_AB             ; mark composite (stores {array_base}, nonzero)
            LDNX_AB P           ; m += p
            LOAD_AB
            SWAP_BD
            SWAP_AB
            SWAP_BD
            APLUSB_TO_D         ; D = m + p
            SWAP_BD             ; B = m + p
            LDNX_AB {n_max - 1}
            SWAP_AB             ; A = m + p, B = bound
            SKPNX_A_GRT_B       ; done with p when m > {n_max - 1}
            JMP_C               ; next multiple
            LDNX_AB outer       ; p += 1, back to the bound check
            COPY_AC
            LDNX_AB P
            LOAD_AB
            LDNX_AB 1
            APLUSB_TO_D
            SWAP_BD
            LDNX_AB P
            SWAP_AB
            SAVE_AB
            SWAP_AB             ; B = p + 1 for the outer check
            JMP_C
P:          .byte 2
"""


def reference_sieve(n_max: int = 32):
    """Oracle: booleans, True where composite, for n in [0, n_max)."""
    composite = [False] * n_max
    for p in range(2, int(math.isqrt(max(n_max - 1, 0))) + 1):
        for m in range(2 * p, n_max, p):
            composite[m] = True
    return composite

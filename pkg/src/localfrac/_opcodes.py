"""Instruction set for compiled expression programs (postfix, stack based).

The numbering is mirrored in ``_ccore.pyx``; keep both in sync.
"""

CONST = 0
VAR = 1
NEG = 2
ADD = 3
SUB = 4
MUL = 5
DIV = 6
POW = 7
SIN = 8
COS = 9
TAN = 10
EXP = 11
LN = 12
SQRT = 13
ABS = 14

UNARY = {"neg": NEG, "sin": SIN, "cos": COS, "tan": TAN, "exp": EXP,
         "ln": LN, "sqrt": SQRT, "abs": ABS}
BINARY = {"+": ADD, "-": SUB, "*": MUL, "/": DIV, "^": POW}

MAX_VARS = 3

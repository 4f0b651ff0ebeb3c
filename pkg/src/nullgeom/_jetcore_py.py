"""Pure numpy fallback for the compiled series-multiplication kernel.

`np.add.at` applies the accumulation unbuffered and in table order, so the
result is bit-identical to the compiled loop in `_jetcore.pyx`.
"""

import numpy as np


def mul_into(out, a, b, ti, tj, tk):
    np.add.at(out, tk, a[ti] * b[tj])


BACKEND = "pure"

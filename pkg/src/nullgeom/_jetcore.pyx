# cython: boundscheck=False, wraparound=False, cdivision=True
"""Hot kernel for truncated Taylor series arithmetic.

A truncated multivariate series is a flat float64 vector of coefficients,
one slot per multi-index of total degree <= order.  Multiplication is a
sparse convolution driven by precomputed index triples (i, j, k) with
alpha_i + alpha_j = alpha_k.
"""


def mul_into(double[::1] out, double[::1] a, double[::1] b,
             int[::1] ti, int[::1] tj, int[::1] tk):
    """out[tk[m]] += a[ti[m]] * b[tj[m]] for every table row m."""
    cdef Py_ssize_t m, n = ti.shape[0]
    with nogil:
        for m in range(n):
            out[tk[m]] += a[ti[m]] * b[tj[m]]


BACKEND = "compiled"

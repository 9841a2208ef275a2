"""Default meta-parameters as functions of the series length ``n``.

Every CLI default and every library default routes through this module so
that the help text and the runtime constants cannot drift apart.
"""
import math

#: Upper end of the memory-parameter search interval [0, D_MAX].
D_MAX = 0.4999
#: Distance to an interval end below which a fit is flagged as a boundary hit.
BOUNDARY_TOL = 1e-4


def bandwidth(n):
    """Number of low Fourier frequencies, floor(n**0.65)."""
    return max(1, int(math.floor(n ** 0.65)))


def k_max(n):
    """Largest number of breaks explored, 2*(floor(ln n) - 1)."""
    return max(0, 2 * (int(math.floor(math.log(n))) - 1))


def penalty(n):
    """Fixed penalty per break, 2/sqrt(n)."""
    return 2.0 / math.sqrt(n)


def bic_penalty(n):
    """BIC-style penalty per break, 2 ln(n)/n."""
    return 2.0 * math.log(n) / n


def step(n):
    """Spacing of the candidate breakpoint grid (about 200 candidates)."""
    return max(1, n // 200)


def min_segment(n):
    """Shortest admissible segment, max(20, ceil(0.05 n))."""
    return max(20, -(-n // 20))


def truncation(n):
    """Number of MA(inf) weights kept when simulating, 10 n."""
    return 10 * n


def slope_fit_range(kmax):
    """K values used to fit the over-segmentation slope: ceil(kmax/2)..kmax."""
    return range(int(math.ceil(kmax / 2)), kmax + 1)

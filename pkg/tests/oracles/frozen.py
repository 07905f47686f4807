"""Reference values from tests/oracles/make_oracles.py (sympy); Kerr a=0.3, m=1 at r=3, theta=1."""

FROZEN = {
    'gamma_001': 0.3240121313954849,
    'gamma_122': -1.0270019084344422,
    'gamma_133': -0.7254913576538102,
    'gamma_233': -0.4621410310536168,
    'gamma_313': 0.3232370595430264,
    'gamma_023': 0.0006401065995481735,
    'riemann_0101': -0.0735365916196499,
    'riemann_2323': 4.263549771329425,
    'riemann_0312': -0.04515659694363881,
    'riemann_0202': 0.11709283962439324,
    'box_gauss_cos': 0.8174417091355269,
}

"""Independent high-precision evaluation of the expected values frozen into
the unit tests. Uses mpmath numerical differentiation and quadrature only;
nothing here shares code with the C++ implementation."""
import mpmath as mp

mp.mp.dps = 40


def imq(r2, c=1, beta=-0.5, sigma=1):
    return (c**2 + r2 / sigma**2) ** beta


def matern32(r, sigma=1):
    a = mp.sqrt(3) / sigma
    return (1 + a * r) * mp.e ** (-a * r)


def show(name, value):
    print(f"{name:48s} {mp.nstr(value, 20)}")


# kernels
show("imq(0,1)", imq(1))
show("imq grad_x x=1 y=0", mp.diff(lambda x: imq((x - 0) ** 2), 1))
show("matern grad_y x=0 y=0.5", mp.diff(lambda y: matern32(abs(0 - y)), 0.5))
# d/dx d/dy k(|x-y|) = -k''(|x-y|) per coordinate; at coincident points in D=2
f = lambda t: matern32(abs(t))
show("matern cross trace D=2 x=y", -2 * mp.diff(f, mp.mpf("1e-30"), 2))
show("imq cross trace D=1 x=y", mp.diff(lambda x, y: imq((x - y) ** 2), (0.2, 0.2), (1, 1)))
show("eq cross trace D=3 x=y sigma=1",
     3 * mp.diff(lambda x, y: mp.e ** (-(x - y) ** 2 / 2), (0.1, 0.1), (1, 1)))

# normalized linear kernel gradient at origin
nl = lambda x, y, v=1: (v**2 + x * y) / (mp.sqrt(v**2 + x**2) * mp.sqrt(v**2 + y**2))
show("normlin grad_x x=0 y=0", mp.diff(lambda x: nl(x, 0), 0))

# student t score nu=4 D=1 x=1
logt = lambda x, nu=4, D=1: -(nu + D) / 2 * mp.log(1 + x**2 / nu)
show("student_t score x=1", mp.diff(logt, 1))

# mixture posterior pi=0.1, mu1=-30*1, mu2=-10*1, D=5 at x=mu1
D = 5
lp1 = mp.log(mp.mpf("0.1"))
lp2 = mp.log(mp.mpf("0.9")) - mp.mpf(1) / 2 * D * 20**2
post = 1 / (1 + mp.e ** (lp2 - lp1))
show("1 - mixture posterior", 1 - post)

# integrability bound examples
bound = lambda S_minus_nu, eta, eps, q, th: (2 * (1 + q / th) * S_minus_nu / (eta * eps)) ** max(1 / th, q / th)
show("bound q=1 th=1 eps=1", bound(1, 1, 1, 1, 1))
show("bound q=0 th=1 eps=2", bound(1, 1, 2, 0, 1))

# zero-mean quadrature fixtures: E_P[T_P g] with T_P g = 2 b g + a g'
g = lambda x: mp.e ** (-x**2) * x
gp = lambda x: mp.diff(g, x)
p = lambda x: mp.e ** (-x**2 / 2)
val = mp.quad(lambda x: p(x) * (-x * g(x) + gp(x)), [-mp.inf, 0, mp.inf]) / mp.quad(p, [-mp.inf, mp.inf])
show("gaussian zero-mean E[T g]", val)
nu = 4
pt = lambda x: (1 + x**2 / nu) ** (-(nu + 1) / 2)
gt = lambda x: x / (1 + x**2)
bt = lambda x: -(nu + 1 - 2) / (2 * nu) * x
at = lambda x: 1 + x**2 / nu
val = mp.quad(lambda x: pt(x) * (2 * bt(x) * gt(x) + at(x) * mp.diff(gt, x)), [-mp.inf, 0, mp.inf])
show("student_t zero-mean E[T g] (unnormalized)", val)

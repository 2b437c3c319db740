"""Independent 40-digit oracle for the frozen effective-index test values.

Retypes the fused-silica Sellmeier coefficients and bisects the exact HE11
eigenvalue equation of a step-index fiber in product form,

    (J1'/(u J1) + K1'/(w K1)) (J1'/(u J1) + (n2/n1)^2 K1'/(w K1))
        = (beta / (k0 n1))^2 (1/u^2 + 1/w^2)^2,

with the derivatives written through recurrences (J1' = J0 - J1/u,
K1' = -K0 - K1/w).  The cladding index follows the linear air-fill rule
n2 = f + (1 - f) n1.  Nothing here imports the package.

Requires mpmath (``pip install mpmath``).
"""
import mpmath as mp

mp.mp.dps = 40
B = [mp.mpf("0.6961663"), mp.mpf("0.4079426"), mp.mpf("0.8974794")]
L = [mp.mpf("0.0684043"), mp.mpf("0.1162414"), mp.mpf("9.896161")]


def n_silica(lam_um):
    x2 = mp.mpf(lam_um) ** 2
    return mp.sqrt(1 + sum(b * x2 / (x2 - l ** 2) for b, l in zip(B, L)))


def n_eff(lam_m, radius=mp.mpf("0.68e-6"), fill=mp.mpf("0.5")):
    lam = mp.mpf(lam_m)
    n1 = n_silica(lam * 10**6)
    n2 = fill + (1 - fill) * n1
    k0 = 2 * mp.pi / lam
    V = k0 * radius * mp.sqrt(n1**2 - n2**2)

    def g(u):
        w = mp.sqrt(V**2 - u**2)
        jj = (mp.besselj(0, u) - mp.besselj(1, u) / u) / (u * mp.besselj(1, u))
        kk = (-mp.besselk(0, w) - mp.besselk(1, w) / w) / (w * mp.besselk(1, w))
        rhs = ((k0 * n1) ** 2 - (u / radius) ** 2) / (k0 * n1) ** 2 * (1 / u**2 + 1 / w**2) ** 2
        return (jj + kk) * (jj + (n2 / n1) ** 2 * kk) - rhs

    # fundamental mode: the sign change of g closest to the first J0 zero
    lo, hi = mp.mpf("1e-3"), min(V, mp.mpf("2.404825557695773")) * (1 - mp.mpf("1e-20"))
    us = [lo + (hi - lo) * k / 400 for k in range(401)]
    gs = [g(u) for u in us]
    k = [i for i in range(400) if gs[i] * gs[i + 1] < 0][-1]
    a, b = us[k], us[k + 1]
    for _ in range(200):
        m = (a + b) / 2
        if g(a) * g(m) <= 0:
            b = m
        else:
            a = m
    u = (a + b) / 2
    return mp.sqrt(n1**2 - (u / (k0 * radius)) ** 2)


if __name__ == "__main__":
    print("n_silica(1.064 um) =", mp.nstr(n_silica("1.064"), 20))
    for lam in ("0.852e-6", "1.064e-6", "1.4164e-6"):
        print(f"n_eff({lam} m) =", mp.nstr(n_eff(lam), 20))

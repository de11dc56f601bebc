"""Single-port statistical block error bound in 30-digit arithmetic.

With one port the best-port gain is exponential with mean sigma2, so the
averaged bound is a one-dimensional integral. The clamped region below the
crossing gain contributes its CDF mass exactly.
"""
from mpmath import mp, mpf, exp, log, binomial, quad, inf

mp.dps = 30


def averaged_bound(users, blocklength, sigma2, noise):
    cw = mpf(1) / blocklength

    def raw(t):
        return sum(
            mpf(k) / users
            * exp(2 * log(binomial(users, k)) - blocklength * log(1 + mpf("0.25") * 2 * k * cw * t / noise))
            for k in range(1, users + 1)
        )

    lo, hi = mpf(0), mpf(1)
    while raw(hi) > 1:
        hi *= 2
    for _ in range(200):
        mid = (lo + hi) / 2
        if raw(mid) > 1:
            lo = mid
        else:
            hi = mid
    head = 1 - exp(-hi / sigma2)
    body = quad(lambda t: exp(-t / sigma2) / sigma2 * raw(t), [hi, 2 * hi, 10 * hi, 100 * hi, inf])
    return head + body


if __name__ == "__main__":
    cases = [
        (1, 5, mpf(2), mpf("0.02")),
        (1, 5, mpf(2), mpf(2) / 10 ** mpf("1.2")),
        (1, 3, mpf("0.5"), mpf("0.1")),
        (10, 5, mpf(2), mpf("0.02")),
        (4, 3, mpf(1), mpf("0.05")),
    ]
    for users, m, s2, noise in cases:
        print(users, m, s2, noise, averaged_bound(users, m, s2, noise))

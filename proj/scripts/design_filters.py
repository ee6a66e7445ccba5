#!/usr/bin/env python3
"""Derive the wavelet filter constants used by the transform module.

Two filter sets are produced, both derived from scratch in extended
precision so the embedded doubles are correct to the last bit:

* Level 1 (odd, biorthogonal): the CDF 9/7 pair, obtained by spectral
  factorization of the 4th-order Daubechies halfband polynomial. Both
  lowpass filters are normalized to DC gain sqrt(2).

* Levels >= 2 (even, orthonormal, quarter-shift): a 14-tap filter built
  from a maximally flat half-sample-delay allpass factor (Thiran) and a
  binomial factor with K zeros at z = -1. The halfband conditions give a
  linear system for the autocorrelation of the remaining factor; the
  spectral factorization with the flattest half-sample phase error is
  selected by enumeration. The opposite tree uses the time reverse, so
  the pair's transfer ratio approximates a half-sample delay while each
  tree stays exactly orthonormal.

Method references:
  I. W. Selesnick, "Hilbert transform pairs of wavelet bases",
    IEEE Signal Processing Letters 8(6), 2001.
  N. G. Kingsbury, "Complex wavelets for shift invariant analysis and
    filtering of signals", Appl. Comput. Harmon. Anal. 10(3), 2001.

Running this file prints the C++ tables and runs float64 self-checks of
the exact boundary/indexing scheme used by the C++ implementation.
"""

import mpmath as mp
import numpy as np

mp.mp.dps = 60


# ---------- small exact-arithmetic polynomial helpers (low order first) ----------

def pmul(a, b):
    out = [mp.mpf(0)] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        for j, bj in enumerate(b):
            out[i + j] += ai * bj
    return out


def autocorr(a):
    """Full correlation a*rev(a); returns lags -(n-1)..(n-1) as a list."""
    return pmul(a, list(reversed(a)))


def binom(k):
    row = [mp.binomial(k, i) for i in range(k + 1)]
    return [mp.mpf(x) for x in row]


def thiran_halfsample(L):
    """Denominator d of the allpass z^-L D(1/z)/D(z) with flat delay 1/2 at DC."""
    tau = mp.mpf("0.5")
    d = []
    for k in range(L + 1):
        term = (-1) ** k * mp.binomial(L, k)
        prod = mp.mpf(1)
        for n in range(L + 1):
            prod *= (tau - L + n) / (tau - L + k + n)
        d.append(term * prod)
    return d


def poly_eval_unit(coeffs, w):
    """Evaluate sum coeffs[n] e^{-j n w} (filter frequency response)."""
    return mp.fsum(c * mp.e ** (-1j * n * w) for n, c in enumerate(coeffs))


# ---------- Q-shift design ----------

def design_qshift(L=3, K=4, taps=14):
    degG = taps - 1 - K - L
    d = thiran_halfsample(L)
    b = binom(K)
    f = pmul(b, d)
    rk = autocorr(f)                      # lags -(K+L)..(K+L)
    mid = len(f) - 1                      # index of lag 0 in rk

    def rknown(lag):
        i = mid + lag
        return rk[i] if 0 <= i < len(rk) else mp.mpf(0)

    # Solve for q = autocorr(g), symmetric, lags 0..degG.
    # Conditions: sum_j q[j] rknown(2k - j) == delta(k), k = 0..degG
    n = degG + 1
    A = mp.matrix(n, n)
    rhs = mp.matrix(n, 1)
    for k in range(n):
        rhs[k] = mp.mpf(1) if k == 0 else mp.mpf(0)
        for j in range(n):
            if j == 0:
                A[k, j] = rknown(2 * k)
            else:
                A[k, j] = rknown(2 * k - j) + rknown(2 * k + j)
    q = mp.lu_solve(A, rhs)
    q = [q[i] for i in range(n)]

    # positivity of Q(w) = q0 + 2 sum q_j cos(jw)
    minQ = min(
        q[0] + 2 * mp.fsum(q[j] * mp.cos(j * w) for j in range(1, n))
        for w in mp.linspace(0, mp.pi, 4001)
    )
    if minQ < -mp.mpf(10) ** (-40):
        raise RuntimeError(f"autocorrelation not factorable, minQ={minQ}")

    # root pool of the full product-filter R_h(z) z^(taps-1):
    #   (1+z)^{2K} part: 2K roots at -1 (K go to h)
    #   allpass part: roots(d) and their reciprocals
    #   Q part: degree 2*degG symmetric poly -> reciprocal pairs
    droots = mp.polyroots(list(reversed(d)), maxsteps=200, extraprec=120)
    qpoly = [q[abs(j)] for j in range(-degG, degG + 1)]  # z^{-degG}..z^{degG} scaled by z^degG
    qroots = mp.polyroots(list(reversed(qpoly)), maxsteps=400, extraprec=160)

    def pair_reciprocal(roots):
        """Group roots into (inside, outside) reciprocal pairs."""
        roots = sorted(roots, key=lambda r: abs(r))
        used = [False] * len(roots)
        pairs = []
        for i, r in enumerate(roots):
            if used[i]:
                continue
            used[i] = True
            best, bdist = None, None
            for j in range(i + 1, len(roots)):
                if used[j]:
                    continue
                dd = abs(roots[j] - 1 / r)
                if bdist is None or dd < bdist:
                    best, bdist = j, dd
            assert best is not None and bdist < mp.mpf(10) ** (-20), "reciprocal pairing failed"
            used[best] = True
            inside, outside = (r, roots[best]) if abs(r) <= 1 else (roots[best], r)
            pairs.append((inside, outside))
        return pairs

    qpairs = pair_reciprocal(qroots)
    # d's own roots form one side; their reciprocals the other.
    dpairs = [(r if abs(r) <= 1 else 1 / r, 1 / r if abs(r) <= 1 else r) for r in droots]

    # group conjugate pairs so enumeration keeps coefficients real
    def conj_groups(pairs):
        groups, used = [], [False] * len(pairs)
        for i, (ri, ro) in enumerate(pairs):
            if used[i]:
                continue
            used[i] = True
            if abs(mp.im(ri)) < mp.mpf(10) ** (-30):
                groups.append([i])
                continue
            for j in range(i + 1, len(pairs)):
                if not used[j] and abs(pairs[j][0] - mp.conj(ri)) < mp.mpf(10) ** (-20):
                    used[j] = True
                    groups.append([i, j])
                    break
            else:
                raise RuntimeError("conjugate grouping failed")
        return groups

    all_pairs = qpairs + dpairs
    groups = conj_groups(all_pairs)

    def build(choice):
        zeros = [mp.mpf(-1)] * K
        for gi, g in enumerate(groups):
            for idx in g:
                zeros.append(all_pairs[idx][0] if choice[gi] == 0 else all_pairs[idx][1])
        h = [mp.mpf(1)]
        for z in zeros:
            h = pmul(h, [-z, mp.mpf(1)])
        h = [mp.re(c) for c in h]
        s = mp.sqrt(2) / mp.fsum(h)
        return [c * s for c in h]

    def hilbert_err(h):
        """Energy of H0b(w) - e^{-jw/2} H0a(w) relative to the filter energy.

        H0b is the time reverse, so H0b = e^{-j(M-1)w} conj(H0a); a small
        value means the tree pair approximates a half-sample delay and the
        resulting complex wavelet is nearly analytic.
        """
        M = len(h)
        num = mp.mpf(0)
        den = mp.mpf(0)
        ws = mp.linspace(mp.mpf(0), mp.pi, 257)
        for w in ws:
            H = poly_eval_unit(h, w)
            Hb = mp.e ** (-1j * (M - 1) * w) * mp.conj(H)
            num += abs(Hb - mp.e ** (-1j * w / 2) * H) ** 2
            den += abs(H) ** 2
        return num / den

    best_h, best_m = None, None
    for mask in range(2 ** len(groups)):
        choice = [(mask >> i) & 1 for i in range(len(groups))]
        h = build(choice)
        m = hilbert_err(h)
        if best_m is None or m < best_m:
            best_h, best_m = h, m

    # exact orthonormality of the winner
    r = autocorr(best_h)
    c = len(best_h) - 1
    resid = max(abs(r[c + 2 * k] - (1 if k == 0 else 0)) for k in range(0, len(best_h) // 2 + 1) if c + 2 * k < len(r))
    return best_h, best_m, resid, minQ


# ---------- CDF 9/7 ----------

def design_97():
    # Daubechies halfband: B(y) = sum_{k=0}^{3} C(3+k,k) y^k, y = sin^2(w/2)
    By = [mp.mpf(x) for x in (1, 4, 10, 20)]
    yroots = mp.polyroots(list(reversed(By)), maxsteps=200, extraprec=120)
    real_y = [y for y in yroots if abs(mp.im(y)) < mp.mpf(10) ** (-40)]
    cplx_y = [y for y in yroots if abs(mp.im(y)) >= mp.mpf(10) ** (-40)]
    assert len(real_y) == 1 and len(cplx_y) == 2

    def z_pair(y):
        # y = (2 - z - 1/z)/4  =>  z^2 - (2 - 4y) z + 1 = 0
        bcoef = 2 - 4 * y
        disc = mp.sqrt(bcoef * bcoef - 4)
        return (bcoef + disc) / 2, (bcoef - disc) / 2

    def from_zeros(zeros, extra_at_minus1):
        h = [mp.mpf(1)]
        for z in zeros:
            h = pmul(h, [-z, mp.mpf(1)])
        for _ in range(extra_at_minus1):
            h = pmul(h, [mp.mpf(1), mp.mpf(1)])
        h = [mp.re(c) for c in h]
        s = mp.sqrt(2) / mp.fsum(h)
        return [c * s for c in h]

    z_c = []
    for y in cplx_y:
        z_c.extend(z_pair(y))
    h9 = from_zeros(z_c, 4)          # 4 zeros at -1 + complex quadruple
    z_r = list(z_pair(real_y[0]))
    g7 = from_zeros(z_r, 4)          # 4 zeros at -1 + real reciprocal pair

    # halfband check: p = conv(h9, g7), center 1, even lags 0
    p = pmul(h9, g7)
    c = (len(p) - 1) // 2
    resid = abs(p[c] - 1)
    for k in range(1, c // 2 + 1):
        resid = max(resid, abs(p[c + 2 * k]))
    return h9, g7, resid


# ---------- float64 simulation of the exact C++ boundary/index scheme ----------

def reflect_idx(i, n):
    i = np.asarray(i) % (2 * n)
    return np.where(i < n, i, 2 * n - 1 - i)


def reflect_sgn(i, n):
    """Half-sample anti-symmetric fold: index plus the sign of the copy."""
    m = np.asarray(i) % (2 * n)
    return np.where(m < n, m, 2 * n - 1 - m), np.where(m < n, 1.0, -1.0)


def conv_sym(x, h):
    """Undecimated centered convolution with half-sample symmetric extension."""
    n = len(x)
    p = len(h) // 2
    xe = x[reflect_idx(np.arange(-p, n + p), n)]
    return np.convolve(xe, h, mode="valid")


def qshift_down(x, ha, hb):
    r = len(x)
    M = len(ha)
    t = np.arange(r // 4)
    ya = np.zeros(r // 4)
    yb = np.zeros(r // 4)
    for nn in range(M):
        ya += ha[nn] * x[reflect_idx(4 * t + M + 1 - 2 * nn, r)]
        yb += hb[nn] * x[reflect_idx(4 * t + M - 2 * nn, r)]
    y = np.empty(r // 2)
    y[1::2] = ya
    y[0::2] = yb
    return y


def qshift_up(ylo, yhi, h0a, h0b, h1a, h1b):
    # Subbands produced by the reversed-pair lowpass extend symmetrically;
    # the modulated highpass pair satisfies h1b == -reverse(h1a), so its
    # interleaved subband is anti-symmetric and extends with a sign flip.
    q = len(ylo)
    M = len(h0a)
    out = np.zeros(2 * q)
    i = np.arange(q)
    for nn in range(M):
        num = i + nn - M // 2
        ok = (num % 2) == 0
        t = num[ok] // 2
        ja = reflect_idx(2 * t + 1, q)
        jb = reflect_idx(2 * t, q)
        ha_idx, ha_sgn = reflect_sgn(2 * t + 1, q)
        hb_idx, hb_sgn = reflect_sgn(2 * t, q)
        out[2 * i[ok] + 1] += h0a[nn] * ylo[ja] + h1a[nn] * ha_sgn * yhi[ha_idx]
        out[2 * i[ok]] += h0b[nn] * ylo[jb] + h1b[nn] * hb_sgn * yhi[hb_idx]
    return out


def simulate(h0a_mp, h9_mp, g7_mp):
    rng = np.random.default_rng(7)
    h0a = np.array([float(c) for c in h0a_mp])
    M = len(h0a)
    h0b = h0a[::-1].copy()
    h1a = np.array([(-1) ** n * h0b[n] for n in range(M)])
    h1b = np.array([(-1) ** n * h0a[n] for n in range(M)])

    x = rng.standard_normal(64)
    xr = qshift_up(qshift_down(x, h0a, h0b), qshift_down(x, h1a, h1b),
                   h0a, h0b, h1a, h1b)
    err_q = np.max(np.abs(xr - x))

    h9 = np.array([float(c) for c in h9_mp])
    g7 = np.array([float(c) for c in g7_mp])
    h1o = np.array([(-1) ** n * g7[n] for n in range(len(g7))])  # centered: sign of center tap +
    g1o = np.array([(-1) ** n * h9[n] for n in range(len(h9))])
    # center the modulation on the middle tap: (-1)^(n - center)
    h1o = np.array([(-1) ** (n - len(g7) // 2) * g7[n] for n in range(len(g7))])
    g1o = np.array([(-1) ** (n - len(h9) // 2) * h9[n] for n in range(len(h9))])

    lo = conv_sym(x, h9)
    hi = conv_sym(x, h1o)
    xr1 = 0.5 * (conv_sym(lo, g7) + conv_sym(hi, g1o))
    err_1 = np.max(np.abs(xr1 - x))
    return err_q, err_1


def emit(name, coeffs):
    body = ",\n    ".join(mp.nstr(c, 17, strip_zeros=False) for c in coeffs)
    print(f"inline constexpr std::array<double, {len(coeffs)}> {name} = {{\n    {body}}};\n")


def main():
    candidates = []
    for L, K in ((3, 4), (4, 3), (2, 5), (5, 2)):
        try:
            h, herr, resid, minQ = design_qshift(L=L, K=K)
            candidates.append((herr, L, K, h, resid, minQ))
            print(f"// candidate L={L} K={K}: hilbert err={mp.nstr(herr, 4)} "
                  f"resid={mp.nstr(resid, 3)} minQ={mp.nstr(minQ, 3)}")
        except Exception as e:
            print(f"// candidate L={L} K={K}: infeasible ({e})")
    candidates.sort(key=lambda c: c[0])
    herr, L, K, h0a, resid, minQ = candidates[0]
    print(f"// selected L={L} K={K}  taps={len(h0a)}  hilbert err={mp.nstr(herr, 4)}  "
          f"orthonormality resid={mp.nstr(resid, 3)}")
    h9, g7, resid97 = design_97()
    print(f"// cdf97: halfband resid={mp.nstr(resid97, 3)}")
    errq, err1 = simulate(h0a, h9, g7)
    print(f"// float64 self-check: qshift 1-D PR err={errq:.3e}  level-1 1-D PR err={err1:.3e}")
    print()
    emit("kQshiftLowA", h0a)
    emit("kBiortAnalysisLow", h9)
    emit("kBiortSynthesisLow", g7)


if __name__ == "__main__":
    main()

#!/usr/bin/env python3
"""Tabulate reference curvature values for the Eguchi-Hanson chart.

Chart coordinates (theta, phi, X, Y) with q = X^2 + Y^2 and
rho2 = sqrt(a^4 + 4 a^2 q):

    g = rho2/4 (dtheta^2 + sin^2(theta) dphi^2)
      + a^2/rho2 (dX^2 + dY^2 + 2 cos(theta) dphi (X dY - Y dX)
                  + q cos^2(theta) dphi^2)

Curvature convention: R^a_{bcd} = d_c G^a_{db} - d_d G^a_{cb}
+ G^a_{ce} G^e_{db} - G^a_{de} G^e_{cb}, R_{abcd} = g_{ae} R^e_{bcd}, so that
R(u, v, u, v) > 0 on the round sphere.

Usage: python3 tools/eguchi_hanson_reference.py > crates/core/tests/data/eguchi_hanson_reference.csv
"""
import itertools

import sympy as sp

A = sp.Integer(1)
th, ph, X, Y = sp.symbols("theta phi X Y", real=True)
xs = [th, ph, X, Y]
q = X**2 + Y**2
rho2 = sp.sqrt(A**4 + 4 * A**2 * q)
f = A**2 / rho2

g = sp.zeros(4, 4)
g[0, 0] = rho2 / 4
g[1, 1] = rho2 / 4 * sp.sin(th) ** 2 + f * q * sp.cos(th) ** 2
g[2, 2] = f
g[3, 3] = f
g[1, 3] = g[3, 1] = f * sp.cos(th) * X
g[1, 2] = g[2, 1] = -f * sp.cos(th) * Y

ginv = g.inv()
dg = [[[sp.diff(g[a, b], xs[c]) for c in range(4)] for b in range(4)] for a in range(4)]
gamma = [[[sum(ginv[a, e] * (dg[e][b][c] + dg[e][c][b] - dg[b][c][e]) for e in range(4)) / 2
           for c in range(4)] for b in range(4)] for a in range(4)]
dgamma = [[[[sp.diff(gamma[a][b][c], xs[d]) for d in range(4)] for c in range(4)] for b in range(4)]
          for a in range(4)]


def riemann_at(point):
    subs = dict(zip(xs, point))
    gv = g.subs(subs).evalf(30)
    gam = [[[gamma[a][b][c].subs(subs).evalf(30) for c in range(4)] for b in range(4)] for a in range(4)]
    dgam = [[[[dgamma[a][b][c][d].subs(subs).evalf(30) for d in range(4)] for c in range(4)]
             for b in range(4)] for a in range(4)]
    up = {}
    for a, b, c, d in itertools.product(range(4), repeat=4):
        val = dgam[a][d][b][c] - dgam[a][c][b][d]
        val += sum(gam[a][c][e] * gam[e][d][b] - gam[a][d][e] * gam[e][c][b] for e in range(4))
        up[(a, b, c, d)] = val
    low = {}
    for a, b, c, d in itertools.product(range(4), repeat=4):
        low[(a, b, c, d)] = sum(gv[a, e] * up[(e, b, c, d)] for e in range(4))
    return gv, low


def orthonormalize(vectors, gv):
    out = []
    for v in vectors:
        w = sp.Matrix(v)
        for u in out:
            w = w - (u.T * gv * w)[0] * u
        w = w / sp.sqrt((w.T * gv * w)[0])
        out.append(w)
    return out


def contract(low, u, v, w, z):
    return sum(low[(a, b, c, d)] * u[a] * v[b] * w[c] * z[d]
               for a, b, c, d in itertools.product(range(4), repeat=4))


points = [
    (sp.Rational(3, 10), sp.Rational(2, 5), 0, 0),
    (sp.Rational(7, 10), sp.Rational(2, 5), 0, 0),
    (sp.Rational(11, 10), sp.Rational(13, 5), 0, 0),
    (sp.pi / 2, sp.Integer(1), 0, 0),
    (sp.Integer(2), sp.Rational(9, 2), 0, 0),
    (sp.Rational(13, 5), sp.Rational(6, 1), 0, 0),
    (sp.Integer(1), sp.Rational(1, 2), sp.Rational(3, 10), sp.Rational(-1, 5)),
    (sp.Rational(11, 5), sp.Integer(4), sp.Rational(-1, 2), sp.Rational(2, 5)),
    (sp.Rational(3, 2), sp.Rational(5, 2), sp.Rational(1, 10), sp.Rational(1, 10)),
]

print("kind,theta,phi,x,y,i,j,k,l,value")
for pt in points:
    gv, low = riemann_at(pt)
    coords = ",".join(f"{float(sp.N(c, 30)):.17e}" for c in pt)
    pairs = [(a, b) for a in range(4) for b in range(a + 1, 4)]
    for (a, b), (c, d) in itertools.combinations_with_replacement(pairs, 2):
        print(f"riemann,{coords},{a},{b},{c},{d},{float(low[(a, b, c, d)]):.17e}")
    if pt[2] == 0 and pt[3] == 0:
        basis = [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]]
        frame = orthonormalize(basis, gv)
        tangents, normals = frame[:2], frame[2:]
        s = sp.zeros(2, 2)
        for al in range(2):
            for be in range(2):
                s[al, be] = -sum(contract(low, e, normals[al], e, normals[be]) for e in tangents)
        s00, s01, s11 = (float(s[0, 0]), float(s[0, 1]), float(s[1, 1]))
        mid, rad = (s00 + s11) / 2, ((s00 - s11) ** 2 / 4 + s01 ** 2) ** 0.5
        eig = [mid - rad, mid + rad]
        for idx, val in enumerate(eig):
            print(f"stability_eigenvalue,{coords},{idx},0,0,0,{val:.17e}")

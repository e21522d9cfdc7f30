#!/usr/bin/env python3
"""Symbolic DH-product forward kinematics, evaluated at fixed configurations.

Writes (or checks) a JSON file of per-link frames that the C++ kinematics
tests compare against. Frames are row-major 4x4 homogeneous transforms,
frame 0 = base, frame 6 = flange.

    fk_sympy_oracle.py --config config/ur5e.robot --write out.json
    fk_sympy_oracle.py --config config/ur5e.robot --check out.json
"""
import argparse
import json
import sys

import sympy as sp

PRECISION = 30


def read_robot(path):
    dh, home = [], None
    with open(path) as f:
        for line in f:
            line = line.split("#", 1)[0].split()
            if not line:
                continue
            if line[0] == "dh":
                dh.append([sp.Rational(v) if "." not in v and "e" not in v.lower() else sp.Float(v, PRECISION)
                           for v in line[1:5]])
            elif line[0] == "home":
                home = [float(v) for v in line[1:7]]
    if len(dh) != 6 or home is None:
        sys.exit(f"{path}: expected 6 dh records and a home record")
    return dh, home


def dh_transform(theta, d, a, alpha):
    ct, st, ca, sa = sp.cos(theta), sp.sin(theta), sp.cos(alpha), sp.sin(alpha)
    return sp.Matrix([
        [ct, -st * ca, st * sa, a * ct],
        [st, ct * ca, -ct * sa, a * st],
        [0, sa, ca, d],
        [0, 0, 0, 1],
    ])


def symbolic_frames(dh):
    q = sp.symbols("q1:7")
    frames = [sp.eye(4)]
    for i, (a, d, alpha, offset) in enumerate(dh):
        frames.append(frames[-1] * dh_transform(q[i] + offset, d, a, alpha))
    return q, frames


def configurations(home):
    pi = float(sp.pi)
    configs = [[0.0] * 6, home,
               [pi / 2, -pi / 2, pi / 2, -pi / 2, -pi / 2, 0.0],
               [0.1, -0.2, 0.3, -0.4, 0.5, -0.6],
               [2.5, -1.3, 2.9, 0.7, -2.2, 3.1],
               [-3.0, 0.25, -1.75, 5.5, 1.0, -6.0]]
    # Fixed pseudo-random points from a linear congruential generator so the
    # file can be reproduced without numpy.
    state = 12345
    for _ in range(10):
        row = []
        for _ in range(6):
            state = (1103515245 * state + 12345) % 2**31
            row.append(-2 * pi + 4 * pi * state / 2**31)
        configs.append(row)
    return configs


def evaluate(dh, home):
    q, frames = symbolic_frames(dh)
    out = []
    for cfg in configurations(home):
        subs = {qi: sp.Float(v, PRECISION) for qi, v in zip(q, cfg)}
        mats = []
        for T in frames:
            vals = T.evalf(PRECISION, subs=subs)
            mats.append([float(vals[r, c]) for r in range(4) for c in range(4)])
        out.append({"q": cfg, "frames": mats})
    return {"description": "standard DH product, row-major 4x4 frames 0..6", "configs": out}


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--config", required=True)
    g = ap.add_mutually_exclusive_group(required=True)
    g.add_argument("--write")
    g.add_argument("--check")
    args = ap.parse_args()

    dh, home = read_robot(args.config)
    data = evaluate(dh, home)
    if args.write:
        with open(args.write, "w") as f:
            json.dump(data, f, indent=1)
        print(f"wrote {len(data['configs'])} configurations to {args.write}")
        return 0

    with open(args.check) as f:
        frozen = json.load(f)
    worst = 0.0
    if len(frozen["configs"]) != len(data["configs"]):
        print("configuration count differs")
        return 1
    for a, b in zip(frozen["configs"], data["configs"]):
        worst = max(worst, max(abs(x - y) for x, y in zip(a["q"], b["q"])))
        for fa, fb in zip(a["frames"], b["frames"]):
            worst = max(worst, max(abs(x - y) for x, y in zip(fa, fb)))
    print(f"max deviation from frozen values: {worst:.3e}")
    return 0 if worst <= 1e-12 else 1


if __name__ == "__main__":
    sys.exit(main())

#!/usr/bin/env python3
"""Independent reference implementation of the 149 swipe features.

Written from the feature catalog definitions with numpy/scipy; shares no code
with the C++ extractor. Generates tests/data/feature_golden.json, which the
C++ unit tests compare against.

Conventions: forward differences, dt in seconds floored at 1 ms, linear
percentile interpolation, population std, biased skewness and excess
kurtosis, atan2 in screen coordinates.
"""

import json
import math
import pathlib
import sys

import numpy as np
from scipy import stats as sps

N_FEATURES = 149


def _skew(v):
    v = np.asarray(v, dtype=float)
    if v.size < 3 or np.var(v) == 0.0:
        return None
    return float(sps.skew(v, bias=True))


def _kurt(v):
    v = np.asarray(v, dtype=float)
    if v.size < 4 or np.var(v) == 0.0:
        return None
    return float(sps.kurtosis(v, fisher=True, bias=True))


def _pct(v, q):
    return float(np.percentile(np.asarray(v, dtype=float), q, method="linear"))


def _iqr(v):
    return _pct(v, 75) - _pct(v, 25)


def _ratio(a, b):
    return None if b == 0 else a / b


def _sector(theta):
    # 0 right, 1 down, 2 left, 3 up; boundaries at +-45 deg belong to the horizontal sectors
    q = math.pi / 4
    if -q <= theta <= q:
        return 0.0
    if q < theta < 3 * q:
        return 1.0
    if -3 * q < theta < -q:
        return 3.0
    return 2.0


def _fold(theta):
    if theta > math.pi / 2:
        return theta - math.pi
    if theta <= -math.pi / 2:
        return theta + math.pi
    return theta


def features(samples, previous_end=None):
    a = np.asarray(samples, dtype=float)
    t, x, y, p, ar = a[:, 0], a[:, 1], a[:, 2], a[:, 3], a[:, 4]
    n = len(t)
    f = [None] * (N_FEATURES + 1)

    dx_s, dy_s = np.diff(x), np.diff(y)
    dt = np.maximum(np.diff(t) / 1000.0, 1e-3)
    seg = np.hypot(dx_s, dy_s)
    vel = seg / dt
    phase = np.arctan2(dy_s, dx_s)
    mid_dt = (dt[:-1] + dt[1:]) / 2
    acc = np.diff(vel) / mid_dt
    cross = dx_s[:-1] * dy_s[1:] - dy_s[:-1] * dx_s[1:]
    dot = dx_s[:-1] * dx_s[1:] + dy_s[:-1] * dy_s[1:]
    turn = np.arctan2(cross, dot)
    ang_vel = turn / mid_dt

    cx, cy = x[-1] - x[0], y[-1] - y[0]
    chord = math.hypot(cx, cy)
    rx, ry = x - x[0], y - y[0]
    if chord > 0:
        dev = np.abs(cx * ry - cy * rx) / chord
    else:
        dev = np.hypot(rx, ry)
    ldp = int(np.argmax(dev))
    traj = float(np.sum(seg))
    dur_ms = t[-1] - t[0]
    mid = n // 2

    f[1], f[2], f[3], f[4] = x[0], y[0], x[-1], y[-1]
    f[5] = dur_ms
    f[6] = chord
    f[7], f[8] = p[mid], ar[mid]
    f[9] = traj
    f[10] = None if previous_end is None else t[0] - previous_end
    C, S = np.sum(np.cos(phase)), np.sum(np.sin(phase))
    f[11] = math.hypot(C / phase.size, S / phase.size)
    f[12] = float(np.median(acc[:3])) if acc.size else None
    f[13] = float(np.median(vel[-2:]))
    f[14] = float(np.mean(vel))
    theta = math.atan2(cy, cx)
    f[15] = _sector(theta) if chord > 0 else None
    f[16] = theta if chord > 0 else None
    f[17] = math.atan2(S, C) if (C != 0 or S != 0) else None
    f[18] = _ratio(chord, traj)
    for base, series in ((19, vel), (22, acc), (25, dev)):
        for k, q in enumerate((20, 50, 80)):
            f[base + k] = _pct(series, q) if series.size else None
    f[28] = float(np.max(dev))
    f[29], f[30] = p[0], ar[0]
    f[31] = phase[0]
    f[32] = float(np.mean(phase))
    f[33] = _ratio(float(np.sum(np.abs(turn))), traj)
    f[34] = dev[mid]
    f[35], f[36] = float(np.mean(p)), float(np.mean(ar))
    f[37] = int(np.argmax(ar)) / (n - 1)
    f[38] = int(np.argmin(p)) / (n - 1)
    f[39] = float(np.mean(acc)) if acc.size else None
    f[40], f[41], f[42] = float(np.std(p)), float(np.std(ar)), float(np.std(vel))
    f[43] = float(np.std(acc)) if acc.size else None
    f[44], f[45], f[46] = _pct(p, 25), _pct(ar, 25), _pct(vel, 25)
    f[47] = _pct(acc, 25) if acc.size else None
    f[48], f[49], f[50] = _pct(p, 75), _pct(ar, 75), _pct(vel, 75)
    f[51] = _pct(acc, 75) if acc.size else None
    f[52], f[53], f[54], f[55] = x.min(), y.min(), x.max(), y.max()
    f[56] = _fold(phase[-1])
    f[57] = vel[0]
    f[58], f[59] = ar[-1], p[-1]
    f[60] = vel[-1]
    f[61] = phase[-1]
    f[62], f[63] = float(np.mean(seg)), float(np.std(seg))

    f[64], f[65], f[66], f[67] = x[ldp], y[ldp], ar[ldp], p[ldp]
    f[68] = vel[min(ldp, n - 2)]
    f[69] = t[ldp] - t[0]
    f[70] = float(np.sum(seg[:ldp]))
    f[71] = math.atan2(y[ldp] - y[0], x[ldp] - x[0]) if ldp > 0 else None
    f[72] = t[-1] - t[ldp]
    f[73] = float(np.sum(seg[ldp:]))
    f[74] = math.atan2(y[-1] - y[ldp], x[-1] - x[ldp]) if ldp < n - 1 else None
    f[75] = _ratio(dev[ldp], chord)

    manhattan = float(np.sum(np.abs(dx_s) + np.abs(dy_s)))
    f[76] = manhattan
    f[77] = _ratio(manhattan, traj)
    f[78], f[79], f[80], f[81] = float(np.median(seg)), _iqr(seg), _skew(seg), _kurt(seg)
    f[82], f[83], f[84], f[85], f[86] = float(np.mean(dev)), float(np.std(dev)), _iqr(dev), _skew(dev), _kurt(dev)

    def summary6(base, s):
        if s.size == 0:
            return
        f[base] = float(np.mean(s))
        f[base + 1] = float(np.median(s))
        f[base + 2] = float(np.std(s))
        f[base + 3] = _iqr(s)
        f[base + 4] = _skew(s)
        f[base + 5] = _kurt(s)

    summary6(87, turn)
    summary6(93, phase)
    f[99] = _ratio(chord, dur_ms / 1000.0)
    f[100], f[101], f[102] = _iqr(vel), _skew(vel), _kurt(vel)
    summary6(103, ang_vel)
    if acc.size:
        f[109] = _iqr(acc)
    f[110], f[111] = _skew(acc), _kurt(acc)
    f[112], f[113], f[114] = _iqr(p), _skew(p), _kurt(p)
    f[115], f[116], f[117], f[118] = p.min(), p.max(), ar.min(), ar.max()
    f[119], f[120] = vel.min(), vel.max()
    dp, da = np.diff(p), np.diff(ar)
    f[121], f[122], f[123], f[124] = dp.min(), dp.max(), float(np.mean(dp)), float(np.median(dp))
    f[125], f[126], f[127], f[128] = da.min(), da.max(), float(np.mean(da)), float(np.median(da))
    vmax, vmin = int(np.argmax(vel)), int(np.argmin(vel))
    f[129], f[130], f[131], f[132] = x[vmax], y[vmax], x[vmin], y[vmin]

    if traj > 0:
        s = np.concatenate(([0.0], np.cumsum(seg))) / traj
    else:
        s = np.arange(n, dtype=float) / (n - 1)
    if np.unique(s).size >= 3:
        coef = np.polyfit(s, p, 2)
        f[133], f[134], f[135] = (float(c) for c in coef)

    dt_ms = dt * 1000.0
    f[136], f[137], f[138] = dt_ms.min(), dt_ms.max(), float(np.mean(dt_ms))
    ex, ey = np.abs(x - np.mean(x)), np.abs(y - np.mean(y))
    f[139], f[140] = ex.max(), ey.max()
    f[141], f[142] = _pct(ex, 20), _pct(ey, 20)
    f[143], f[144] = float(np.median(ex)), float(np.median(ey))
    f[145], f[146] = _pct(ex, 80), _pct(ey, 80)
    if chord > 0:
        f[147], f[148] = cx / chord, cy / chord
        f[149] = 1.0 if abs(cx) >= abs(cy) else 0.0

    values, defined = [], []
    for i in range(1, N_FEATURES + 1):
        v = f[i]
        ok = v is not None and math.isfinite(float(v))
        values.append(float(v) if ok else 0.0)
        defined.append(bool(ok))
    return values, defined


def fixture_swipe():
    # ten points of a gently curving upward swipe, 16 ms apart
    out = []
    for i in range(10):
        out.append([1000 + 16 * i, 500.0 + 3.0 * i + 0.4 * i * i, 1500.0 - 55.0 * i,
                    0.40 + 0.02 * i - 0.003 * i * i, 0.10 + 0.005 * (i % 4)])
    return out


def fuzzed_swipes(rng, count):
    out = []
    for k in range(count):
        n = int(rng.integers(4, 41))
        gaps = rng.integers(1, 31, size=n - 1)
        if gaps.sum() < 30:
            gaps[-1] += 30 - gaps.sum()
        t = np.concatenate(([rng.integers(0, 10_000_000)], gaps)).cumsum()
        step = rng.normal(0.0, 1.0, size=(n - 1, 2)) * rng.uniform(1, 40) + rng.normal(0, 20, size=2)
        if k % 7 == 3:
            step[rng.integers(0, n - 1)] = 0.0  # stationary sample
        xy = np.vstack((rng.uniform(0, 1080, size=2), step)).cumsum(axis=0)
        pr = np.clip(rng.uniform(0.2, 0.8) + rng.normal(0, 0.05, size=n), 0.01, 1.0)
        area = np.clip(rng.uniform(0.05, 0.2) + rng.normal(0, 0.01, size=n), 0.001, 1.0)
        samples = [[int(t[i]), float(xy[i, 0]), float(xy[i, 1]), float(pr[i]), float(area[i])] for i in range(n)]
        prev = int(t[0] - rng.integers(100, 3000)) if k % 2 == 0 else None
        out.append((samples, prev))
    return out


def main():
    dest = pathlib.Path(sys.argv[1]) if len(sys.argv) > 1 else pathlib.Path(__file__).resolve().parents[1] / "data" / "feature_golden.json"
    rng = np.random.default_rng(20240611)
    cases = [("fixture10", fixture_swipe(), None)]
    for i, (s, prev) in enumerate(fuzzed_swipes(rng, 60)):
        cases.append((f"fuzz{i:02d}", s, prev))
    doc = []
    for name, samples, prev in cases:
        values, defined = features(samples, prev)
        doc.append({"name": name, "samples": samples, "previous_end": prev, "values": values, "defined": defined})
    dest.parent.mkdir(parents=True, exist_ok=True)
    dest.write_text(json.dumps(doc, indent=None) + "\n")
    print(f"wrote {len(doc)} cases to {dest}")


if __name__ == "__main__":
    main()

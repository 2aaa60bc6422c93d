"""Reference values for the closed-form noise/schedule/statistics helpers.

Inputs are IEEE doubles (written with repr so they round-trip); outputs are
evaluated with mpmath at 50 digits and written with 30 significant digits.
Run from this directory: python3 gen_formulas.py > formulas.json
"""
import json
import math

import mpmath as mp

mp.mp.dps = 50
N = 50


def s(x):
    return mp.nstr(mp.mpf(x), 30, min_fixed=0, max_fixed=0)


def idle(dt, t1, t2):
    dt, t1, t2 = mp.mpf(dt), mp.mpf(t1), mp.mpf(t2)
    px = (1 - mp.exp(-dt / t2)) / 4
    pz = (1 - mp.exp(-dt / t1)) / 2 - px
    return px, pz


def attenuation(length_m, loss):
    return mp.power(10, -mp.mpf(loss) * (mp.mpf(length_m) / 1000))


def wait(n, links, p_att, egr):
    if n == 0:
        return mp.mpf(0)
    return mp.mpf(n) ** 2 / (mp.mpf(links) * mp.mpf(p_att) * mp.mpf(egr))


def wilson(k, n, z):
    k, n, z = mp.mpf(k), mp.mpf(n), mp.mpf(z)
    c = (k + z * z / 2) / (n + z * z)
    h = z / (n + z * z) * mp.sqrt(k * (n - k) / n + z * z / 4)
    return c - h, c + h


out = {"idle": [], "attenuation": [], "expected_wait": [], "round_idle_time": [], "tau_star": [], "wilson": []}

for i in range(N):
    dt = 10.0 ** (-9 + 7 * i / (N - 1))
    t1 = 50e-6 * (1 + (i * 7 % 10))
    t2 = t1 * (0.6 + 1.4 * ((i * 3) % 11) / 10)
    px, pz = idle(dt, t1, t2)
    out["idle"].append({"dt": repr(dt), "t1": repr(t1), "t2": repr(t2), "px": s(px), "pz": s(pz)})

    length = 200.0 * i + 0.5 * (i % 3)
    loss = 0.05 + 0.02 * (i % 17)
    out["attenuation"].append({"length_m": repr(length), "loss": repr(loss), "p_att": s(attenuation(length, loss))})

    n = 0 if i == 0 else 3 * i + (i % 4)
    links = 1 + i % 4
    p_att = 1.0 / (1 + (i % 9))
    egr = 10.0 ** (5 + 5 * i / (N - 1))
    out["expected_wait"].append(
        {"n": n, "links": links, "p_att": repr(p_att), "egr": repr(egr), "wait": s(wait(n, links, p_att, egr))}
    )

    n_remote = 2 * i
    egr2 = 10.0 ** (6 + 3 * ((i * 7) % N) / (N - 1))
    length2 = 100.0 * (i % 5)
    loss2 = 0.2
    t_ro = 1.5e-6 * (1 + (i % 3))
    links2 = 1 + (i % 2)
    w = wait(n_remote, links2, attenuation(length2, loss2), egr2)
    out["round_idle_time"].append(
        {
            "n_remote": n_remote,
            "egr": repr(egr2),
            "links": links2,
            "length_m": repr(length2),
            "loss": repr(loss2),
            "t_ro": repr(t_ro),
            "t_idle": s(max(mp.mpf(t_ro), w)),
        }
    )

    d = 3 + 2 * (i % 20)
    egr3 = 10.0 ** (6 + 2.5 * ((i * 13) % N) / (N - 1))
    r_c = 10.0 ** (6.5 + 1.5 * (i % 7) / 6)
    tau = (d - 1) // 2 if mp.mpf(egr3) < mp.mpf(r_c) else 2
    out["tau_star"].append({"d": d, "egr": repr(egr3), "r_c": repr(r_c), "tau": tau})

    shots = [1, 7, 100, 1000, 10_000, 123_457, 10_000_000][i % 7] * (1 + i // 7)
    k = [0, 1, shots // 3, shots // 2, shots - 1, shots, min(shots, 5)][(i * 3) % 7]
    lo, hi = wilson(k, shots, 1.96)
    if k == 0:
        lo = mp.mpf(0)
    if k == shots:
        hi = mp.mpf(1)
    out["wilson"].append({"k": k, "n": shots, "low": s(lo), "high": s(hi)})

print(json.dumps(out, indent=1))

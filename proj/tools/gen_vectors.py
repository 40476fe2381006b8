#!/usr/bin/env python3
"""Regenerates the oracle test vectors under tests/vectors/.

Written straight from the model equations with plain Python floats and no
shared code with the C++ library, so the vectors act as an independent check
of the channel, propulsion-energy and advantage-estimation code paths.

    python3 tools/gen_vectors.py [out_dir]
"""
import csv
import math
import os
import random
import sys

SCHEMA = "1"


def los_pathloss(h, d, fc):
    return 30.9 + (22.25 - 0.5 * math.log10(h)) * math.log10(d) + 20 * math.log10(fc)


def nlos_pathloss(h, d, fc):
    nlos = 32.4 + (43.2 - 7.6 * math.log10(h)) * math.log10(d) + 20 * math.log10(fc)
    return max(los_pathloss(h, d, fc), nlos)


def los_prob(h, d):
    d0 = max(294.05 * math.log10(h) - 432.94, 18.0)
    p1 = 233.98 * math.log10(h) - 0.95
    r = math.sqrt(max(d * d - h * h, 0.0))
    if r <= d0:
        return 1.0
    p = d0 / r + math.exp(-r / p1 + d0 / p1)
    return min(1.0, max(0.0, p))


def mean_loss(h, d, fc):
    p = los_prob(h, d)
    return p * los_pathloss(h, d, fc) + (1 - p) * nlos_pathloss(h, d, fc)


RHO, AREA, DELTA, SOLIDITY, PLATE, CT, CF, MASS, G = (
    1.225, 0.79, 0.012, 0.1, 0.01, 0.3, 0.13, 2.0, 9.8)


def norm(v):
    return math.sqrt(sum(x * x for x in v))


def thrust(v, a):
    s = norm(v)
    f = [MASS * a[i] + 0.5 * RHO * PLATE * s * v[i] for i in range(3)]
    f[2] += MASS * G  # minus m' * (0, 0, -g)
    return norm(f)


def energy(v, a, ts):
    f = thrust(v, a)
    s = norm(v)
    blade = DELTA / 8 * (f / (CT * RHO * AREA) + 3 * s * s) * math.sqrt(RHO * SOLIDITY ** 2 * AREA * f / CT)
    # climb credited only when ascending
    climb = MASS * G * max(v[2], 0.0)
    inner = math.sqrt(f * f / (4 * RHO * RHO * AREA * AREA) + s ** 4 / 4) - s * s / 2
    induced = (1 + CF) * f * math.sqrt(max(inner, 0.0))
    parasite = 0.5 * RHO * PLATE * s ** 3
    return (blade + climb + induced + parasite) * ts


def random_ball(rng, radius):
    while True:
        p = [rng.uniform(-radius, radius) for _ in range(3)]
        if norm(p) <= radius:
            return p


def gae_bruteforce(r, v, done, gamma, lam, boot):
    n = len(r)

    def next_value(t):
        if done[t]:
            return 0.0
        return v[t + 1] if t + 1 < n else boot

    delta = [r[t] + gamma * next_value(t) - v[t] for t in range(n)]
    adv = []
    for t in range(n):
        total = 0.0
        for tp in range(t, n):
            total += (gamma * lam) ** (tp - t) * delta[tp]
            if done[tp]:
                break
        adv.append(total)
    ret = []
    for t in range(n):
        total = 0.0
        tail = True
        for tp in range(t, n):
            total += gamma ** (tp - t) * r[tp]
            if done[tp]:
                tail = False
                break
        if tail:
            total += gamma ** (n - t) * boot
        ret.append(total)
    return adv, ret


def main():
    out = sys.argv[1] if len(sys.argv) > 1 else os.path.join(
        os.path.dirname(__file__), "..", "tests", "vectors")
    os.makedirs(out, exist_ok=True)
    rng = random.Random(20240611)

    with open(os.path.join(out, "channel.csv"), "w", newline="") as fh:
        fh.write(f"# schema: channel_vectors v{SCHEMA}\n")
        w = csv.writer(fh)
        w.writerow(["h", "d", "fc", "L_LoS", "L_NLoS", "P_LoS", "L_mean"])
        for _ in range(1000):
            h = rng.uniform(10.0, 200.0)
            r = rng.uniform(0.0, 2000.0)
            d = math.sqrt(h * h + r * r)
            fc = rng.uniform(0.5, 6.0)
            w.writerow([repr(h), repr(d), repr(fc), repr(los_pathloss(h, d, fc)),
                        repr(nlos_pathloss(h, d, fc)), repr(los_prob(h, d)),
                        repr(mean_loss(h, d, fc))])

    with open(os.path.join(out, "energy.csv"), "w", newline="") as fh:
        fh.write(f"# schema: energy_vectors v{SCHEMA}\n")
        w = csv.writer(fh)
        w.writerow(["vx", "vy", "vz", "ax", "ay", "az", "Ts", "thrust", "energy"])
        for _ in range(1000):
            v = random_ball(rng, 20.0)
            a = random_ball(rng, 5.0)
            ts = rng.choice([0.5, 1.0, 2.0])
            w.writerow([repr(x) for x in v + a] + [repr(ts), repr(thrust(v, a)), repr(energy(v, a, ts))])

    with open(os.path.join(out, "gae.csv"), "w", newline="") as fh:
        fh.write(f"# schema: gae_vectors v{SCHEMA}\n")
        w = csv.writer(fh)
        w.writerow(["instance", "t", "reward", "value", "done", "gamma", "lambda",
                    "bootstrap", "advantage", "return"])
        for inst in range(100):
            n = rng.randint(1, 10)
            r = [rng.uniform(-1.0, 2.0) for _ in range(n)]
            v = [rng.uniform(-1.0, 3.0) for _ in range(n)]
            done = [rng.random() < 0.2 for _ in range(n)]
            gamma = rng.uniform(0.5, 0.99)
            lam = rng.uniform(0.0, 1.0)
            boot = rng.uniform(-1.0, 3.0)
            adv, ret = gae_bruteforce(r, v, done, gamma, lam, boot)
            for t in range(n):
                w.writerow([inst, t, repr(r[t]), repr(v[t]), int(done[t]), repr(gamma),
                            repr(lam), repr(boot), repr(adv[t]), repr(ret[t])])


if __name__ == "__main__":
    main()

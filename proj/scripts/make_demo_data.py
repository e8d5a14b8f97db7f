#!/usr/bin/env python3
"""Generate a small synthetic multi-population PLINK panel plus a ready-to-run
config, so the pipeline can be exercised without real genotype data.

Allele frequencies follow a Balding-Nichols model: per population, the SNP
frequency is Beta-distributed around a shared ancestral frequency with spread
set by fst. One SNP is re-drawn at a fixed frequency to act as the causal
marker referenced from the generated config.

Usage:
    PYTHONPATH=build/python python3 scripts/make_demo_data.py demo/
    build/gxepower qc-pca   --config demo/demo.ini
    build/gxepower simulate --config demo/demo.ini
    build/gxepower scan     --config demo/demo.ini
    build/gxepower power    --config demo/demo.ini
"""

import argparse
import pathlib

import numpy as np

import gxepower


def balding_nichols(rng, pops, m, fst, maf_lo=0.1, maf_hi=0.9):
    shape = (1.0 - fst) / fst
    ancestral = rng.uniform(maf_lo, maf_hi, size=m)
    blocks, fams, sexes = [], [], []
    for pop, n in pops:
        freq = np.clip(rng.beta(ancestral * shape, (1.0 - ancestral) * shape),
                       0.01, 0.99)
        dos = (rng.random((n, m)) < freq).astype(np.int8)
        dos += (rng.random((n, m)) < freq).astype(np.int8)
        blocks.append(dos.astype(float))
        fams += [pop] * n
        sexes += [1 + (i % 2) for i in range(n)]
    return np.vstack(blocks), fams, sexes


CONFIG = """\
[paths]
genotypes = {stem}
output = {out}

[qc]
maf_min = 0.05
hwe_alpha = 0

[pca]
components = 3
thin_step = 1
grm_thin_step = 1

[gamma]
CEU = 0.2
YRI = 0.5
JPT = -0.1

[disease]
causal_snp = {causal}
baseline_prevalence = 0.05
relative_risk = 10

[replicates]
n_h0 = 20
n_h1 = 20
n_cases = {cases}

[power]
regions = whole, 50, 1

[run]
seed = 1191
"""


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("outdir", type=pathlib.Path)
    ap.add_argument("--per-pop", type=int, default=100,
                    help="individuals per population (default 100)")
    ap.add_argument("--snps", type=int, default=500)
    ap.add_argument("--fst", type=float, default=0.1)
    ap.add_argument("--causal-freq", type=float, default=0.25)
    ap.add_argument("--missing-rate", type=float, default=0.01)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    pops = [("CEU", args.per_pop), ("YRI", args.per_pop), ("JPT", args.per_pop)]
    dosages, fams, sexes = balding_nichols(rng, pops, args.snps, args.fst)

    causal = args.snps // 2
    n = dosages.shape[0]
    dosages[:, causal] = ((rng.random(n) < args.causal_freq).astype(float) +
                          (rng.random(n) < args.causal_freq).astype(float))
    if args.missing_rate > 0:
        mask = rng.random(dosages.shape) < args.missing_rate
        mask[:, causal] = False
        dosages[mask] = np.nan

    args.outdir.mkdir(parents=True, exist_ok=True)
    stem = args.outdir / "panel"
    ids = [f"{fam}_{i + 1}" for i, fam in enumerate(fams)]
    data = gxepower.GenotypeData.from_dosages(
        dosages, family_ids=fams, individual_ids=ids, sex=sexes)
    data.write(str(stem))

    # Case-control ascertainment: condition on ~40% cases, far above the
    # population incidence. This is where the exact-count sampler earns its
    # keep and where the interaction scan has cases to work with.
    cases = max(10, round(0.4 * n))
    cfg = args.outdir / "demo.ini"
    cfg.write_text(CONFIG.format(stem=stem, out=args.outdir / "out",
                                 causal=f"snp{causal + 1}", cases=cases))
    print(f"wrote {stem}.bed/.bim/.fam ({n} individuals, {args.snps} SNPs)")
    print(f"wrote {cfg} (causal snp{causal + 1}, {cases} cases/replicate)")


if __name__ == "__main__":
    main()

#!/usr/bin/env python3
# SPDX-License-Identifier: Apache-2.0
"""Regenerates the test corpora under data/ with RDKit.

The C++ project does not depend on RDKit; this script only freezes
reference data that the tests compare against.

  qm9_like.smi        QM9-style molecules: <= 9 heavy atoms from C,N,O,F,
                      neutral, kekulized. Built from random connected
                      fragments of ZINC-derived MOSES molecules.
  qm9_like_200.sdf    The first 200 of those as V2000 records with explicit H.
  zinc_roundtrip.jsonl  MOSES SMILES with RDKit's unsanitized parse (atom
                      order as written) and RDKit's average molecular weight.

Usage: make_fixtures.py MOSES_TRAIN_CSV_GZ OUT_DIR
"""

import gzip
import json
import random
import sys

from rdkit import Chem, RDLogger
from rdkit.Chem import Descriptors

RDLogger.DisableLog("rdApp.*")

QM9_ELEMENTS = {"C", "N", "O", "F"}
SIZE_WEIGHTS = {9: 60, 8: 20, 7: 10, 6: 5, 5: 2, 4: 1, 3: 1, 2: 1}


def fragment(mol, rng):
    heavy = [a.GetIdx() for a in mol.GetAtoms() if a.GetSymbol() in QM9_ELEMENTS]
    if not heavy:
        return None
    sizes, weights = zip(*SIZE_WEIGHTS.items())
    size = rng.choices(sizes, weights)[0]
    chosen = [rng.choice(heavy)]
    frontier = set()
    while len(chosen) < size:
        frontier.update(
            n.GetIdx()
            for n in mol.GetAtomWithIdx(chosen[-1]).GetNeighbors()
            if n.GetSymbol() in QM9_ELEMENTS
        )
        frontier.difference_update(chosen)
        if not frontier:
            break
        chosen.append(rng.choice(sorted(frontier)))
    rw = Chem.RWMol()
    index = {}
    for old in chosen:
        atom = Chem.Atom(mol.GetAtomWithIdx(old).GetSymbol())
        index[old] = rw.AddAtom(atom)
    for b in mol.GetBonds():
        u, v = b.GetBeginAtomIdx(), b.GetEndAtomIdx()
        if u in index and v in index:
            rw.AddBond(index[u], index[v], b.GetBondType())
    frag = rw.GetMol()
    try:
        Chem.SanitizeMol(frag)
        Chem.Kekulize(frag, clearAromaticFlags=True)
    except Exception:
        return None
    return frag


def qm9_like(moses_smiles, count, rng):
    seen = set()
    out = []
    for smi in moses_smiles:
        mol = Chem.MolFromSmiles(smi)
        if mol is None:
            continue
        Chem.Kekulize(mol, clearAromaticFlags=True)
        frag = fragment(mol, rng)
        if frag is None:
            continue
        key = Chem.MolToSmiles(frag)
        if key in seen:
            continue
        seen.add(key)
        out.append(Chem.MolToSmiles(frag, kekuleSmiles=True, canonical=True))
        if len(out) == count:
            break
    return out


def to_sdf(smiles_list):
    blocks = []
    for i, smi in enumerate(smiles_list):
        mol = Chem.MolFromSmiles(smi)
        Chem.Kekulize(mol, clearAromaticFlags=True)
        mol = Chem.AddHs(mol)
        mol.SetProp("_Name", f"qm9_like_{i + 1}")
        block = Chem.MolToMolBlock(mol, kekulize=True, includeStereo=False)
        blocks.append(block + f"> <smiles>\n{smi}\n\n$$$$\n")
    return "".join(blocks)


def zinc_roundtrip(moses_smiles, count):
    bond_names = {
        Chem.BondType.SINGLE: 0,
        Chem.BondType.DOUBLE: 1,
        Chem.BondType.TRIPLE: 2,
        Chem.BondType.AROMATIC: 3,
    }
    rows = []
    for smi in moses_smiles[:count]:
        raw = Chem.MolFromSmiles(smi, sanitize=False)
        sanitized = Chem.MolFromSmiles(smi)
        edges = sorted(
            [min(b.GetBeginAtomIdx(), b.GetEndAtomIdx()),
             max(b.GetBeginAtomIdx(), b.GetEndAtomIdx()),
             bond_names[b.GetBondType()]]
            for b in raw.GetBonds()
        )
        rows.append({
            "smiles": smi,
            "symbols": [a.GetSymbol() for a in raw.GetAtoms()],
            "edges": edges,
            "mol_wt": Descriptors.MolWt(sanitized),
        })
    return rows


def main():
    src, out_dir = sys.argv[1], sys.argv[2]
    with gzip.open(src, "rt") as fh:
        moses = [line.strip() for line in fh][1:]
    rng = random.Random(20260101)
    shuffled = moses[:]
    rng.shuffle(shuffled)

    smiles = qm9_like(shuffled, 2400, rng)
    with open(f"{out_dir}/qm9_like.smi", "w") as fh:
        fh.write("\n".join(smiles) + "\n")
    with open(f"{out_dir}/qm9_like_200.sdf", "w") as fh:
        fh.write(to_sdf(smiles[:200]))
    with open(f"{out_dir}/zinc_roundtrip.jsonl", "w") as fh:
        for row in zinc_roundtrip(shuffled[-300:], 300):
            fh.write(json.dumps(row) + "\n")


if __name__ == "__main__":
    main()

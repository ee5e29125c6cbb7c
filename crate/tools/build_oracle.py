#!/usr/bin/env python3
"""Regenerates the bundled molecule list and the RDKit reference data under data/.

The outputs are committed; the Rust tests only read them. Rerun after changing the
selection logic:

    python3 tools/build_oracle.py
"""

import json
import os
import random

from rdkit import Chem, RDConfig, rdBase
from rdkit.Chem import AllChem, rdDepictor
from rdkit.Chem.EnumerateStereoisomers import EnumerateStereoisomers, StereoEnumerationOptions

rdBase.DisableLog("rdApp.*")

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
DATA = os.path.join(ROOT, "data")
ORACLE = os.path.join(DATA, "oracle")

ALLOWED = {"C", "N", "O", "S", "P", "F", "Cl", "Br", "I", "B", "Si"}
SEED = 20240917
CORPUS_SIZE = 200
STEREO_TARGET = 60
PAIR_COUNT = 500
KEKULE_PAIRS = 4


def load_source():
    path = os.path.join(RDConfig.RDDataDir, "NCI", "first_5K.smi")
    with open(path) as f:
        for line in f:
            parts = line.split()
            if parts:
                yield parts[0]


def acceptable(mol):
    if mol is None or len(Chem.GetMolFrags(mol)) != 1:
        return False
    n = mol.GetNumHeavyAtoms()
    if not 5 <= n <= 35:
        return False
    for a in mol.GetAtoms():
        if a.GetSymbol() not in ALLOWED or a.GetNumRadicalElectrons() or abs(a.GetFormalCharge()) > 1:
            return False
    return True


def strip_double_bond_stereo(mol):
    for b in mol.GetBonds():
        b.SetStereo(Chem.BondStereo.STEREONONE)
        b.SetBondDir(Chem.BondDir.NONE)
    return mol


def with_random_stereo(mol, rng):
    centers = Chem.FindMolChiralCenters(mol, includeUnassigned=True, useLegacyImplementation=False)
    if not centers or len(centers) > 4:
        return None
    opts = StereoEnumerationOptions(onlyUnassigned=True, unique=True, tryEmbedding=False)
    isomers = list(EnumerateStereoisomers(mol, options=opts))
    if not isomers:
        return None
    iso = rng.choice(isomers)
    strip_double_bond_stereo(iso)
    Chem.AssignStereochemistry(iso, cleanIt=True, force=True)
    if "@" not in Chem.MolToSmiles(iso):
        return None
    return iso


def build_corpus(rng):
    plain, stereo = [], []
    seen = set()
    for smi in load_source():
        mol = Chem.MolFromSmiles(smi)
        if not acceptable(mol):
            continue
        strip_double_bond_stereo(mol)
        key = Chem.MolToSmiles(mol)
        if key in seen:
            continue
        seen.add(key)
        if len(stereo) < STEREO_TARGET:
            iso = with_random_stereo(mol, rng)
            if iso is not None:
                stereo.append(iso)
                continue
        plain.append(mol)
    rng.shuffle(plain)
    mols = stereo + plain[: CORPUS_SIZE - len(stereo)]
    rng.shuffle(mols)
    return mols


def total_h(mol):
    return sum(a.GetTotalNumHs() for a in mol.GetAtoms())


def mutate(mol, rng):
    """A near neighbor: one carbon with a hydrogen turned into nitrogen, or a new methyl."""
    rw = Chem.RWMol(mol)
    carbons = [a.GetIdx() for a in rw.GetAtoms() if a.GetSymbol() == "C" and a.GetTotalNumHs() > 0]
    if not carbons:
        return None
    idx = rng.choice(carbons)
    if rng.random() < 0.5:
        rw.GetAtomWithIdx(idx).SetAtomicNum(7)
    else:
        new = rw.AddAtom(Chem.Atom(6))
        rw.AddBond(idx, new, Chem.BondType.SINGLE)
    try:
        out = rw.GetMol()
        Chem.SanitizeMol(out)
    except Exception:
        return None
    return out


def invert_all(mol):
    m = Chem.Mol(mol)
    for a in m.GetAtoms():
        tag = a.GetChiralTag()
        if tag == Chem.ChiralType.CHI_TETRAHEDRAL_CW:
            a.SetChiralTag(Chem.ChiralType.CHI_TETRAHEDRAL_CCW)
        elif tag == Chem.ChiralType.CHI_TETRAHEDRAL_CCW:
            a.SetChiralTag(Chem.ChiralType.CHI_TETRAHEDRAL_CW)
    return m


def invert_one(mol, rng):
    m = Chem.Mol(mol)
    tagged = [a for a in m.GetAtoms() if a.GetChiralTag() != Chem.ChiralType.CHI_UNSPECIFIED]
    if len(tagged) < 2:
        return None
    a = rng.choice(tagged)
    a.InvertChirality()
    return m


def verdict(a, b):
    ma, mb = Chem.MolFromSmiles(a), Chem.MolFromSmiles(b)
    return Chem.MolToSmiles(ma) == Chem.MolToSmiles(mb)


def build_pairs(mols, rng):
    pairs = []
    smiles = [Chem.MolToSmiles(m) for m in mols]
    stereo_idx = [i for i, s in enumerate(smiles) if "@" in s]

    def add(a, b, kind):
        pairs.append((a, b, "equal" if verdict(a, b) else "unequal", kind))

    # Kekule spellings: the reference treats them as equal to the aromatic form.
    aromatic = [m for m in mols if m.GetAromaticAtoms()]
    for m in aromatic[:KEKULE_PAIRS]:
        k = Chem.Mol(m)
        Chem.Kekulize(k, clearAromaticFlags=True)
        add(Chem.MolToSmiles(m), Chem.MolToSmiles(k, kekuleSmiles=True), "kekule")

    while len(pairs) < PAIR_COUNT:
        i = rng.randrange(len(mols))
        m, s = mols[i], smiles[i]
        r = rng.random()
        if r < 0.45:
            other = Chem.MolToSmiles(m, doRandom=True, canonical=False)
            add(s, other, "random_order")
        elif r < 0.6 and stereo_idx:
            j = rng.choice(stereo_idx)
            inv = invert_all(mols[j]) if rng.random() < 0.5 else invert_one(mols[j], rng)
            if inv is None:
                continue
            add(smiles[j], Chem.MolToSmiles(inv, doRandom=True, canonical=False), "stereo_variant")
        elif r < 0.8:
            mut = mutate(m, rng)
            if mut is None:
                continue
            add(s, Chem.MolToSmiles(mut, doRandom=True, canonical=False), "mutated")
        else:
            j = rng.randrange(len(mols))
            add(s, Chem.MolToSmiles(mols[j], doRandom=True, canonical=False), "other_molecule")
    return pairs[:PAIR_COUNT]


def depiction(mol):
    """Normalized 2D coordinates (y down) and wedge bonds for a stereo molecule."""
    m = Chem.Mol(mol)
    rdDepictor.Compute2DCoords(m)
    Chem.WedgeMolBonds(m, m.GetConformer())
    conf = m.GetConformer()
    xs = [conf.GetAtomPosition(i).x for i in range(m.GetNumAtoms())]
    ys = [conf.GetAtomPosition(i).y for i in range(m.GetNumAtoms())]
    lo_x, lo_y = min(xs), min(ys)
    span = max(max(xs) - lo_x, max(ys) - lo_y, 1e-6)
    atoms = []
    for a in m.GetAtoms():
        i = a.GetIdx()
        atoms.append({
            "symbol": a.GetSymbol(),
            "aromatic": a.GetIsAromatic(),
            "charge": a.GetFormalCharge(),
            "hydrogens": a.GetTotalNumHs(),
            "x": round(0.1 + 0.8 * (xs[i] - lo_x) / span, 6),
            "y": round(0.1 + 0.8 * (max(ys) - ys[i]) / span, 6),
        })
    bonds = []
    for b in m.GetBonds():
        kind = {
            Chem.BondType.SINGLE: "single",
            Chem.BondType.DOUBLE: "double",
            Chem.BondType.TRIPLE: "triple",
            Chem.BondType.AROMATIC: "aromatic",
        }[b.GetBondType()]
        if b.GetBondDir() == Chem.BondDir.BEGINWEDGE:
            kind = "solid_wedge"
        elif b.GetBondDir() == Chem.BondDir.BEGINDASH:
            kind = "dashed_wedge"
        bonds.append([b.GetBeginAtomIdx(), b.GetEndAtomIdx(), kind])
    return {"smiles": Chem.MolToSmiles(mol), "atoms": atoms, "bonds": bonds}


def main():
    rng = random.Random(SEED)
    mols = build_corpus(rng)
    os.makedirs(ORACLE, exist_ok=True)

    with open(os.path.join(DATA, "molecules.smi"), "w") as f:
        f.write("# Sample molecules (NCI open set subset, RDKit canonical form).\n")
        for m in mols:
            f.write(Chem.MolToSmiles(m) + "\n")

    with open(os.path.join(ORACLE, "properties.tsv"), "w") as f:
        f.write("# smiles\theavy_atoms\tbonds\ttotal_hydrogens\tformula\n")
        for m in mols:
            formula = AllChem.CalcMolFormula(m)
            f.write(f"{Chem.MolToSmiles(m)}\t{m.GetNumHeavyAtoms()}\t{m.GetNumBonds()}\t{total_h(m)}\t{formula}\n")

    with open(os.path.join(ORACLE, "pairs.tsv"), "w") as f:
        f.write("# first\tsecond\treference_verdict\tkind\n")
        for a, b, v, kind in build_pairs(mols, rng):
            f.write(f"{a}\t{b}\t{v}\t{kind}\n")

    with open(os.path.join(ORACLE, "wedges.jsonl"), "w") as f:
        for m in mols:
            if "@" in Chem.MolToSmiles(m):
                f.write(json.dumps(depiction(m)) + "\n")


if __name__ == "__main__":
    main()

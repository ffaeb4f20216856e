"""Scripted walk through the interactive loop on the multimodal demo corpus.

Mirrors what an analyst does in the browser: suggest a training set from the
tree, train, inspect the class-match coloring, repair prototypes, pull new
bags out of high-error branches, retrain.

Run from the repo root:  python3 demos/03_workbench_session.py
"""

from pathlib import Path

from milt.data import load_csv
from milt.miltree import build_miltree, classify_positions, suggest_training
from milt.session import Session
from milt.svm import SvmConfig

ds = load_csv(Path(__file__).parents[1] / "data" / "multimodal.csv")
tree, _ = build_miltree(ds, "si")
positions = classify_positions(tree)
ext = sum(p.kind == "external" for p in positions.values())
print(f"tree built: {len(ds.bags)} bags, {ext} external / {len(ds.bags) - ext} internal")

session = Session(ds, tree, SvmConfig(variant="c", c=1.0))
session.set_training(suggest_training(tree, positions, 0.25, seed=5))
print(f"suggested training set: {len(session.training)} bags")

report = session.train()
print(f"initial training-scope accuracy: {report.metrics['accuracy']:.3f}, "
      f"misclassified: {sorted(report.misclassified)}")

if report.misclassified:
    session.swap_to_alternative(report.misclassified)
    report = session.train()
    print(f"after swapping to alternate prototypes: {report.metrics['accuracy']:.3f}")

all_report = session.classmatch_all()
print(f"\nclass-match over every bag: accuracy {all_report.metrics['accuracy']:.3f}")
branches = session.error_branches(all_report)
if branches:
    top = branches[0]
    print(f"worst branch: node {top.node_id}, error rate {top.error_rate:.2f} "
          f"over {top.n_leaves} bags")
    new_bags = [b for b in top.bag_ids if b not in session.training][:2]
    if new_bags:
        session.add_bags(new_bags)
        session.train()
        final = session.classmatch_all()
        print(f"added {new_bags} to training; accuracy now "
              f"{final.metrics['accuracy']:.3f}")
else:
    print("no high-error branches; the model already covers the tree")

print(f"\nhistory: {[a.kind for a in session.history]}")
out = Path(__file__).parent / "out"
out.mkdir(exist_ok=True)
session.save(out / "session.json")
print(f"session saved to {out / 'session.json'} (replayable via Session.load)")

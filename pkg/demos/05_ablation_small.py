"""A scaled-down ablation: joint training against the two single-task
variants on a corpus with genuine attachment ambiguity.

The full-size sweep lives in the slow acceptance test; this one trades
corpus size and epochs for a coffee-break runtime.
"""
from dualpointer.decoding import PunctuationPolicy, parse, uas
from dualpointer.toygrammar import ambiguous_treebank
from dualpointer.training import TrainConfig, train

train_set = ambiguous_treebank(300, seed=100)
dev_set = ambiguous_treebank(60, seed=200)
policy = PunctuationPolicy()
print(f"train {len(train_set)} / dev {len(dev_set)} sentences")

table = {}
for mode, variants in (
    ("joint", ("p1", "p2", "p3")),
    ("heads-only", ("p4",)),
    ("deps-only", ("p5",)),
):
    config = TrainConfig(mode=mode, epochs=2, seed=1,
                         bilstm_hidden=64, d_pretrained=50, d_random=50)
    best, _ = train(train_set, dev_set, config)
    model = best.load()
    for variant in variants:
        trees = [parse(s, model, variant=variant) for s in dev_set]
        table[variant] = uas(dev_set, trees, policy)
    print(f"{mode}: trained (best epoch {best.epoch})")

print()
for variant in ("p1", "p2", "p3", "p4", "p5"):
    print(f"  {variant}  dev UAS {table[variant]:5.2f}")
print("\np1 merges both score matrices; p2/p3 read one matrix from the "
      "jointly trained model; p4/p5 are trained on one task alone.")

"""A miniature end-to-end benchmark: three models, five attacks.

The full pipeline at small scale: synthesize features, split 80/20,
standardize, train the classical baseline and both hybrid heads, then
score every model under every attack at two budgets.  The command-line
`qshield repro` runs the same loop at paper scale.
"""

import numpy as np

from qshield import attacks, data, nn

SEED = 2
fset = data.synth_gaussian(40, 8, 2, class_separation=3.0, seed=SEED)
train_set, test_set = data.split(fset, data.SplitSpec(0.8, seed=SEED))
train_set, test_set, _ = data.standardize(train_set, test_set)

models = {}
for kind in ("classical", "hybrid1", "hybrid2"):
    rng = np.random.default_rng(SEED)
    model = nn.build_model(kind, 8, 2, n_qubits=3, n_layers=2, rng=rng)
    model, trace = nn.train(
        model, train_set, nn.TrainConfig(epochs=10, seed=SEED)
    )
    models[kind] = model
    print(f"trained {kind}: final train accuracy {trace[-1]['accuracy']:.3f}")

print(f"\n{'attack':<16} {'eps':>5}", end="")
for kind in models:
    print(f" {kind:>10}", end="")
print()

for method in ("none",) + tuple(m for m in attacks.METHODS if m != "none"):
    for eps in (0.05, 1.0):
        label = "without_attack" if method == "none" else method
        print(f"{label:<16} {eps:>5}", end="")
        accs = []
        for kind, model in models.items():
            acc = attacks.evaluate_under_attack(
                model, test_set, attacks.AttackConfig(method, eps, seed=SEED)
            )
            accs.append(acc)
        top = max(accs)
        for acc in accs:
            mark = "*" if acc >= top - 1e-9 else " "
            print(f" {100 * acc:>9.1f}{mark}", end="")
        print()

print("\n* marks the best model in each row")

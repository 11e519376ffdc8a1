"""Attacks: five ways to perturb a feature vector within a norm ball.

Each attack takes an oracle, a clean point, its true label, and a
budget eps measured in the standardized feature space.  Four attacks
read gradients; SPSA only ever evaluates the loss, so it works against
a black box.
"""

import numpy as np

from qshield import attacks, data, nn

# a quick model to attack
fset = data.synth_gaussian(60, 6, 2, class_separation=3.0, seed=5)
train_set, test_set = data.split(fset, data.SplitSpec(0.8, seed=5))
train_set, test_set, _ = data.standardize(train_set, test_set)
rng = np.random.default_rng(5)
model = nn.build_model("classical", 6, 2, rng=rng)
model, _ = nn.train(model, train_set, nn.TrainConfig(epochs=20, seed=5))
clean_acc = nn.accuracy(model, test_set.features, test_set.labels)
print(f"clean test accuracy {clean_acc:.3f}")

# craft a perturbation of one test sample with every method
x = test_set.features[0]
label = int(test_set.labels[0])
print(f"\nsample 0: true label {label}, "
      f"clean prediction {int(nn.predict(model, x[None, :])[0])}")
print(f"{'method':<12} {'norm':>5} {'distance':>9} {'prediction':>11}")
norms = {"gradient": 2, "fgsm": np.inf, "pgd_l2": 2, "sparse_l1": 1, "spsa": np.inf}
for method, order in norms.items():
    config = attacks.AttackConfig(method, eps=1.0, seed=5)
    adv = attacks.craft(model, x, label, config)
    dist = np.linalg.norm(adv - x, ord=order)
    pred = int(nn.predict(model, adv[None, :])[0])
    print(f"{method:<12} {'L' + str(order):>5} {dist:9.4f} {pred:>11}")

# a budget sweep: larger eps gives the attacker more room
print("\nfgsm accuracy over the whole test set as eps grows:")
for eps in (0.0, 0.1, 0.5, 1.0, 2.0):
    acc = attacks.evaluate_under_attack(
        model, test_set, attacks.AttackConfig("fgsm", eps, seed=5)
    )
    print(f"  eps {eps:4.1f}: accuracy {acc:.3f}")

# the same evaluation is bitwise reproducible under a fixed seed
config = attacks.AttackConfig("pgd_l2", 1.0, seed=5)
first = attacks.craft_set(model, test_set, config)
second = attacks.craft_set(model, test_set, config)
print("\npgd_l2 rerun identical:", np.array_equal(first, second))

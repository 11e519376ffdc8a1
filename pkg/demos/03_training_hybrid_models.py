"""Training: classical and hybrid heads on the same synthetic task.

Both model families share the layout dense -> hidden -> dense; the
hybrid heads replace the ReLU6 hidden layer with a quantum circuit
whose Z readouts feed the output layer.  Training is plain mini-batch
Adam, seeded end to end.
"""

import numpy as np

from qshield import data, nn

# two well-separated Gaussian blobs, 8 features, 60 samples per class
fset = data.synth_gaussian(60, 8, 2, class_separation=10.0, seed=3)
train_set, test_set = data.split(fset, data.SplitSpec(0.8, seed=3))
train_set, test_set, stats = data.standardize(train_set, test_set)
print(f"train {train_set.n_samples} samples, test {test_set.n_samples} samples")

for kind in ("classical", "hybrid1"):
    rng = np.random.default_rng(3)
    model = nn.build_model(kind, 8, 2, n_qubits=4, n_layers=2, rng=rng)
    model, trace = nn.train(
        model, train_set, nn.TrainConfig(epochs=8, batch_size=4, seed=3)
    )
    print(f"\n{kind}:")
    for entry in trace:
        print(f"  epoch {entry['epoch']}: loss {entry['loss']:.4f} "
              f"accuracy {entry['accuracy']:.3f}")
    test_acc = nn.accuracy(model, test_set.features, test_set.labels)
    print(f"  test accuracy {test_acc:.3f}")

# checkpoints round-trip the exact parameter vector
path = "demo_model.qhm"
nn.save_checkpoint(model, path)
loaded = nn.load_checkpoint(path)
same = np.array_equal(nn.params_vector(model), nn.params_vector(loaded))
print(f"\ncheckpoint round-trip bitwise identical: {same}")
print("header:", nn.checkpoint_header(path))

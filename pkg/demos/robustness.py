"""
Missing values and noise
========================

A short version of the robustness experiments: values are removed at random
from both train and test, or the z-normalized series receive Gaussian noise,
and the test error is tracked. Missing values need no imputation; the trees
route them to a learned side at every split.

Three replications and a cascade of depth zero keep this to a couple of
minutes. The acceptance suite runs ten replications.
"""

from xem import XEMParams, generate_synthetic, missing_data_experiment, noise_experiment, train_test_split
from xem.lce import LCEParams

train, test = train_test_split(generate_synthetic(seed=1))
params = XEMParams(win_pct=20, lce=LCEParams(n_trees=5, max_depth=0))

for row in missing_data_experiment(train, test, params, fractions=(0.0, 0.25, 0.5), replications=3):
    print(f"missing {row.fraction:4.2f}: error {row.mean_error:.3f} +/- {row.std_error:.3f}")

# %%
# Noise is added after per-series z-normalization.
for row in noise_experiment(train, test, params, sigmas=(0.0, 0.5, 1.0)):
    print(f"noise sigma {row.sigma:3.1f}: error {row.error:.3f}")

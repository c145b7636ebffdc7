# %% [markdown]
# # Drawing trajectories and checking them against exact path laws

# %%
from markov_dilations import (MatrixSequence, dilate, exact_path_law, path_frequency_check,
                              simulate, simulate_arrays, validate_stochastic, verify_markov)

seq = MatrixSequence([
    validate_stochastic([[0.7, 0.3], [0.4, 0.6]]),
    validate_stochastic([[0.1, 0.9], [0.5, 0.5]]),
    validate_stochastic([[0.0, 1.0], [1.0, 0.0]]),
])
spec = dilate(seq, "universal")

# %%
for rec in simulate(spec, k=0, horizon=3, seed=42, n_traj=5):
    print(rec.inputs, rec.states)

# %% [markdown]
# exact law of (X1, X2, X3) from state 0, by enumerating symbol sequences

# %%
law = exact_path_law(spec, 0, 3)
for path, p in sorted(law):
    print(path, round(p, 4))

# %%
# conditional transition probabilities vs the matrices, every prefix
report = verify_markov(spec, seq, horizon=3)
print(report.summary())

# %%
_, states = simulate_arrays(spec, 0, 3, seed=7, n_traj=100_000)
mc = path_frequency_check(states, law)
print(mc.passed, max(abs(c.detail.get("z", 0)) for c in mc))

# %%
# same seed, same bytes
a = simulate_arrays(spec, 0, 3, seed=7, n_traj=1000)[1]
b = simulate_arrays(spec, 0, 3, seed=7, n_traj=1000)[1]
print(a.tobytes() == b.tobytes())

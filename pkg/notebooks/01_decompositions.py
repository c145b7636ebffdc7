# %% [markdown]
# # Splitting a stochastic matrix into deterministic maps
#
# Any row-stochastic matrix is a convex mix of 0/1 matrices, one per map
# {0..N-1} -> {0..N-1}. Two ways to get the weights below.

# %%
import numpy as np
from markov_dilations import decompose_full, decompose_greedy, recombine, validate_stochastic
from markov_dilations.decompose import greedy_steps, map_from_label

P = validate_stochastic([[0.7, 0.3],
                         [0.4, 0.6]])
print(P.entries)

# %% [markdown]
# Maps are labelled base N, most significant digit = image of state 0.
# For N = 2: 0 -> (0,0), 1 -> identity, 2 -> swap, 3 -> (1,1).

# %%
for label in range(4):
    print(label, map_from_label(label, 2).table)

# %% [markdown]
# ## Full product weights
# weight of a map = product over rows of the entry it picks. Every map gets a weight.

# %%
full = decompose_full(P)
for w, label in full:
    print(f"{map_from_label(label, 2).table}  {w:.2f}")
print("sum:", full.weights.sum())

# %% [markdown]
# ## Greedy
# take the biggest entry per row, subtract as much as fits, repeat.
# Stops after at most N*N - N + 1 steps.

# %%
for w, label, resid in greedy_steps(P):
    print(f"take {map_from_label(label, 2).table} with weight {w:.2f}; residual\n{resid}")

greedy = decompose_greedy(P)
print(len(greedy), "terms")

# %%
# both recombine to P
print(np.abs(recombine(full).entries - P.entries).max())
print(np.abs(recombine(greedy).entries - P.entries).max())

# %% [markdown]
# Bigger matrices: the greedy count stays small while the full one is N**N.

# %%
rng = np.random.default_rng(0)
for n in (3, 4, 5):
    M = validate_stochastic(rng.dirichlet(np.ones(n), size=n))
    print(n, len(decompose_greedy(M)), "greedy terms vs", n**n, "maps")

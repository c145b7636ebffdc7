# %% [markdown]
# # An invertible dynamics that hides the Markov chain
#
# The system is coupled to a two-sided sequence of environment symbols.
# One step = couple the system with coordinate 1, then shift the sequence left.
# Nothing is random here; the randomness sits in how the symbols are drawn.

# %%
import numpy as np
from markov_dilations import (GlobalState, alpha_apply, cocycle_apply, dilate, env_component,
                              induced_transition, shift, validate_stochastic)
from markov_dilations.dilation import MINIMAL, UNIVERSAL, build_alphabet, build_coupling, universal_q
from markov_dilations import decompose_full

P = validate_stochastic([[0.7, 0.3], [0.4, 0.6]])
spec = dilate(P, MINIMAL)
print("symbols:", spec.alphabet.symbols())   # (j, label) pairs

# %% [markdown]
# Reading a symbol (0, label) applies that map to the system and leaves
# (old state, label) behind, which is what makes the step reversible.

# %%
phi = spec.coupling
for g, sym in enumerate(spec.alphabet.symbols()):
    print(sym, [phi(i, g) for i in range(2)])

# %%
z = GlobalState(system=0, lo=-1, values=(3, 0, 2, 1))   # coordinates -1..2
print(z.window())
z1 = alpha_apply(spec, z, 1)
print("after one step:", z1.system, z1.window())
print("and back:", alpha_apply(spec, z1, -1) == z)

# %% [markdown]
# Environment coordinates after t steps, from the start state alone

# %%
rng = np.random.default_rng(3)
z0 = GlobalState(1, -2, tuple(rng.integers(spec.gsize, size=9)))
t = 3
zt = alpha_apply(spec, z0, t)
print([env_component(spec, z0, n, t) for n in range(-3, 4)])
print([zt.env(n) for n in range(-3, 4)])

# %% [markdown]
# Couple without shifting: applying 1..t then t+1..t+s is the same as 1..t+s.

# %%
z = GlobalState(0, 1, (0, 1, 4, 2))
t, s = 2, 2
lhs = cocycle_apply(spec, z, t + s)
rhs = shift(cocycle_apply(spec, shift(cocycle_apply(spec, z, t), t), s), -t)
print(lhs == rhs)

# %% [markdown]
# ## One coupling for every matrix
# with all N**N maps in the alphabet, only the symbol law has to change.

# %%
alphabet = build_alphabet(2, UNIVERSAL)
coupling = build_coupling(alphabet)
for _ in range(3):
    M = validate_stochastic(rng.dirichlet(np.ones(2), size=2))
    back = induced_transition(coupling, universal_q(decompose_full(M), alphabet))
    print(np.abs(back.entries - M.entries).max())

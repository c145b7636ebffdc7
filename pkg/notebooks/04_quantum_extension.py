# %% [markdown]
# # The same construction on Hilbert space
#
# The coupling is a bijection, so it is a permutation unitary V on C^N (x) C^|G|.
# Averaging V^dagger (a (x) 1) V over the symbol vector gives a unital channel
# that acts on diagonal matrices exactly like P.

# %%
import numpy as np
from markov_dilations import (automorphism_J, build_env_vector, build_unitary,
                              conditional_expectation, davis_channel, decompose_full, dilate,
                              flow, kraus_channel, validate_stochastic,
                              verify_cms_extension)
from markov_dilations.quantum import DiagonalObservable, check_cqd1, channel_distance

P = validate_stochastic([[0.7, 0.3], [0.4, 0.6]])
spec = dilate(P, "minimal")
V = build_unitary(spec.coupling)
ups = build_env_vector(spec.q_at(1))
T = kraus_channel(V, ups)
print(V.matrix.real.astype(int))

# %%
print(verify_cms_extension(T, P).summary())

# %%
a = np.array([[1.0, 2 - 1j], [2 + 1j, -1.0]])
print(T(a))
print(conditional_expectation(V.conjugate(a), ups))

# %% [markdown]
# Off-diagonal entries are not constrained; here they get damped.

# %%
print(T(np.array([[0, 1], [0, 0]], dtype=complex)))

# %% [markdown]
# ## Flow over t steps
# j_t(a) lives on the system plus coordinates 1..t; averaging gives T^t(a).

# %%
for t in (1, 2, 3):
    jt, dev = flow(V, ups, a, t)
    print(t, jt.matrix.shape, dev)

# %% [markdown]
# The shift-and-conjugate map J turns diagonal observables into the
# observable composed with the classical step.

# %%
F = DiagonalObservable.indicator(2, spec.gsize, 0, 0, system=1, config={0: 2})
JF = automorphism_J(V, F.operator())
print(JF, JF.matrix.diagonal().real)
print(check_cqd1(spec.coupling, V, [F], t=2).summary())

# %% [markdown]
# With every map in the alphabet the channel is the plain mixture of the maps.

# %%
uni = dilate(P, "universal")
T_uni = kraus_channel(build_unitary(uni.coupling), build_env_vector(uni.q_at(1)))
print(channel_distance(T_uni, davis_channel(decompose_full(P))))

"""Multilinear maps, dagger adjoints, and feedback loops.

Run as a script; every draw is seeded, so the printed numbers are stable.
"""

import numpy as np

from operaq import linalg, multilinear as ml

rng = np.random.default_rng(7)

# ---- a bilinear map and its adjoint ---------------------------------------

# the componentwise product on C^2 pairs, built by sweeping basis tuples
prod2 = ml.from_function(lambda x, y: np.array([x[0] * y[0], x[1] * y[1]]), (2, 2), 2)
print("arity:", prod2.arity, " input dims:", prod2.input_dims)

x = np.array([1.0, 2.0])
y = np.array([3.0, -1.0])
print("prod2(x, y) =", ml.apply(prod2, [x, y]))

# the adjoint swaps the output functional into the first slot and returns
# the Riesz vector of the induced functional on the last input slot
adj = ml.adjoint(prod2)
print("adjoint profile:", adj.input_dims, "->", adj.output_dim)

# defining identity: <prod2(x, y), w> equals the pairing of y against the
# Riesz vector of prod2^dag(w, x)
w = np.array([0.5, 1.5])
lhs = linalg.inner(ml.apply(prod2, [x, y]), w)
rhs = ml.functional_value(ml.adjoint_apply(adj, w, [x]), y)
print("adjoint pairing deviation:", abs(lhs - rhs))

# ---- the double adjoint is the original map -------------------------------

for trial in range(3):
    dims = tuple(int(d) for d in rng.integers(1, 5, size=int(rng.integers(1, 4))))
    out = int(rng.integers(1, 5))
    m = rng.standard_normal((out, int(np.prod(dims)))) + 1j * rng.standard_normal(
        (out, int(np.prod(dims)))
    )
    phi = ml.MultilinearVectorMap(dims, out, m)
    print(f"double adjoint residual {dims}->{out}:", ml.double_adjoint_residual(phi))

# ---- adjoints of composites factor contravariantly ------------------------

psi = ml.from_function(lambda a, b: np.array([a[0] * b[1], a[1] * b[0]]), (2, 2), 2)
parts = [
    ml.MultilinearVectorMap((2, 2), 2, rng.standard_normal((2, 4))),
    ml.MultilinearVectorMap((2, 2), 2, rng.standard_normal((2, 4))),
]
print("contravariant identity residual:", ml.contravariant_residual(psi, parts))

# ---- closing a feedback loop ----------------------------------------------

# T maps U (+) X to Y (+) X; the trailing X output is fed back into the
# trailing X input, and the closed loop is the induced map U -> Y
u_dim, x_dim, y_dim = 2, 3, 2
m = rng.standard_normal((y_dim + x_dim, u_dim + x_dim))
loop = m[y_dim:, u_dim:]
m[y_dim:, u_dim:] = loop * (0.7 / linalg.op_norm(loop))  # make the loop contractive

problem = ml.FeedbackProblem(
    ml.MultilinearVectorMap((u_dim + x_dim,), y_dim + x_dim, m), (u_dim, x_dim), (y_dim, x_dim)
)
print("loop gain:", problem.loop_gain, " well posed:", problem.well_posed)

closed = ml.feedback_solve(problem)
picard = ml.feedback_picard(problem, steps=200)
print("direct vs 200-step Picard:", linalg.op_norm(closed.matrix - picard.matrix))

# a singular loop has no unique solution and is refused
bad = np.zeros((2, 2), dtype=complex)
bad[1, 1] = 1.0
ill = ml.FeedbackProblem(ml.MultilinearVectorMap((2,), 2, bad), (1, 1), (1, 1))
try:
    ml.feedback_solve(ill)
except Exception as exc:
    print("ill-posed loop refused:", type(exc).__name__)

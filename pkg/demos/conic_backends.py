"""
The same second-order cone program on the interior-point backend and on the
small first-order reference backend.
"""
import numpy as np

from astargcs import ADMMBackend, ClarabelBackend, ProgramBuilder
from astargcs.conic import dump_program

# closest point of the square [-1, 1]^2 to three anchors, summed distances
anchors = np.array([[3.0, 0.0], [0.0, 2.5], [-2.0, -2.0]])
pb = ProgramBuilder()
x = pb.var(2, lb=-1.0, ub=1.0)
for p in anchors:
    t = pb.var(1)[0]
    pb.cost(t, 1.0)
    pb.soc(t, [([x[0]], [1.0], -p[0]), ([x[1]], [1.0], -p[1])])
prog = pb.build()

print(dump_program(prog))
for backend in (ClarabelBackend(), ADMMBackend()):
    sol = backend.solve(prog, 1e-7)
    print(f"{type(backend).__name__:16s} {sol.status:10s} obj={sol.objective:.7f} x={sol.x[x]} "
          f"({1000 * sol.seconds:.1f} ms)")

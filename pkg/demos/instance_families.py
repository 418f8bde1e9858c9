"""
The three instance families, saved to JSON and drawn as SVG.
"""
from pathlib import Path

from astargcs import gen_bars, gen_maze, gen_village, h1_table, load_instance, run_astar_gcs, save_instance
from astargcs.cli import render_svg

out = Path("demo_out")
out.mkdir(exist_ok=True)

for name, g in [
    ("maze", gen_maze(8, 8, seed=1)),
    ("bars", gen_bars(15, 15, 8, seed=4)),
    ("village", gen_village(5, 5, 3, seed=2)),
]:
    save_instance(g, out / f"{name}.json")
    assert load_instance(out / f"{name}.json") == g
    kinds = sorted({s.kind for s in g.sets})
    print(f"{name:8s} dim={g.dimension} vertices={g.n_vertices:4d} edges={len(g.edges):5d} kinds={kinds}")
    if g.dimension == 2:
        res = run_astar_gcs(g, h1_table(g))
        svg = render_svg(g, res.best_feasible.points, res.S_final)
        (out / f"{name}.svg").write_text(svg)
        print(f"         path cost {res.C_f:.4f}, bound {res.C_lb:.4f}, drawn to {out / (name + '.svg')}")

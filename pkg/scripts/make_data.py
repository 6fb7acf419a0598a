"""Regenerate the bundled data files from the fixtures module."""
from pathlib import Path

from balpoly import fixtures as fx
from balpoly.combos import BalancedWitness, Combo
from balpoly.concavity import BetaPositiveWitness
from balpoly.io import Workspace
from balpoly.weights import Weight

OUT = Path(__file__).resolve().parents[1] / "src" / "balpoly" / "data"


def main():
    OUT.mkdir(exist_ok=True)
    ws = Workspace()

    def save(obj, name):
        ws.save(obj, OUT / name)

    plane = fx.euclidean_space(2)
    save(plane, "plane.cx")
    save(Weight(plane, 2, {"R": 1.0}), "plane_b.wt")
    save(fx.ray(), "ray.cx")

    L = fx.line_in_three_rays()
    save(L, "three_rays.cx")
    b3 = fx.three_rays_balancing(L)
    save(b3, "three_rays_b.wt")
    for name, a in (("strong", (-1, 1, 1)), ("concave", (-1, 1, 0)), ("weak", (-1, 2, 0)), ("none", (1, 1, 1))):
        save(fx.three_rays_function_on(L, *a), f"three_rays_{name}.fn")
    for name, (c, pts, nu) in fx.combo_points(1.0).items():
        obj = {"type": "combo", "combo": Combo(c, pts, nu), "complex": L, "balancing": b3, "witness": None}
        if name == "balanced":
            obj["witness"] = BalancedWitness(L, "tau", ["s1", "s2", "s3"], (1 / 3) * b3,
                                             BetaPositiveWitness([(1 / 3, [])], 1))
        save(obj, f"combo_{name}.combo")

    F = fx.four_rays()
    save(F, "four_rays.cx")
    c1, c2 = fx.four_rays_generators(F)
    save(c1, "four_rays_c1.wt")
    save(c2, "four_rays_c2.wt")
    save(c1 + c2, "four_rays_b.wt")
    save(fx.four_rays_kink(F), "four_rays_kink.fn")
    for n in (2, 4, 8):
        save(fx.four_rays_smoothed(F, n), f"four_rays_smooth_{n}.fn")

    X = fx.nine_cones()
    save(X, "nine_cones.cx")
    save(fx.nine_cones_balancing(X), "nine_cones_b.wt")
    save(fx.nine_cones_function(X), "nine_cones_f.fn")


if __name__ == "__main__":
    main()

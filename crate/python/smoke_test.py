"""Smoke test for the ocst extension module.

Build with `maturin develop -m crates/python/Cargo.toml`, or copy
target/release/libocst.so to ocst.so somewhere on PYTHONPATH.
"""

import ocst


def main():
    inst = ocst.Instance.generate(6, seed=1)
    print(inst)
    assert inst.n == 6
    assert sum(inst.degrees) == 10

    cost, tree = ocst.oracle(inst)
    assert inst.is_admissible(tree)
    assert inst.cost(tree) == cost
    assert ocst.oracle(inst, f0q=True)[0] == cost

    for kind in ["F1Q_UT", "F2L", "F0Q"]:
        r = ocst.solve(inst, kind)
        assert r["status"] == "optimal", r
        assert abs(r["record"] - cost) < 1e-4, (kind, r)

    h_cost, h_tree, trace = ocst.local_search(inst)
    assert inst.is_admissible(h_tree)
    assert h_cost >= cost
    costs = [c for _, _, c in trace]
    assert all(a > b for a, b in zip(costs, costs[1:]))

    assert ocst.count_trees([1, 1, 2, 2]) == 2
    code = ocst.prufer_encode(4, [(1, 3), (3, 4), (4, 2)])
    assert sorted(ocst.prufer_decode(4, code)) == [(1, 3), (2, 4), (3, 4)]
    assert ocst.build_lp(inst, "F1L:M=n-1").startswith("\\")

    again = ocst.Instance.from_json(inst.to_json())
    assert again.requirements == inst.requirements
    print("ok: optimum", cost, "local search", h_cost, "steps", len(trace))


if __name__ == "__main__":
    main()

"""Total nodal components of Kostlan polynomials on the full sphere.

Degree n polynomials carry about 0.23 n components; the normalized totals
settle as n doubles. Degree 1 is a single great circle, always exactly one
component.
"""

from nodal import total_count_kostlan, tune_allocator


def main():
    tune_allocator()
    res = total_count_kostlan([1, 16, 64, 128], n_samples=24, seed=12)
    print("degree | mean total | se     | total/n | mesh ok")
    for n, mean, se, norm, ok in zip(res.n_list, res.means, res.ses,
                                     res.normalized, res.mesh_certified):
        print(f"{n:6d} | {mean:10.2f} | {se:6.2f} | {norm:7.4f} | {ok}")
    print("successive normalized differences:",
          [round(d, 4) for d in res.cauchy_diffs])


if __name__ == "__main__":
    main()

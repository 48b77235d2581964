"""
Subgroup chi-square tests
=========================

Each subgroup is compared with its complement in a 2x2 table of
positive/negative outcomes.
"""

# %%
from amimort.cohortstats import chi_square_2x2, chisq_sf, format_p, summary_table
from amimort.ingest import load_tables, prepare_cohort
from amimort.synthgen import SynthConfig, generate
import tempfile

# one degree of freedom, so the survival function is erfc(sqrt(x/2))
for x in (0.004, 3.841459, 6.22):
    print(x, chisq_sf(x))

# %%
# Under-30 row of the published cohort: 4 positive, 9 negative, out of 1629 / 3807
res = chi_square_2x2(4, 9, 1629 - 4, 3807 - 9)
print(res.statistic, format_p(res.p_value))

# %%
d = tempfile.mkdtemp()
generate(SynthConfig(n_admissions=1500, seed=2), d)
cases, _ = prepare_cohort(load_tables(d))

for row in summary_table(cases):
    p = format_p(row.chi_square.p_value) if row.chi_square else ""
    print(f"{row.characteristic:26s} {row.subgroup:16s} {row.n:5d} {100 * row.positive_pct:5.1f}% {p}")

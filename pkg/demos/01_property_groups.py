"""From AAIndex1 to eight amino-acid descriptors.

Walks through the descriptor stage one step at a time: parse the bundled
release, keep the roughly normal indices, split them by keyword and compress
each group to its first principal component.
"""

from aaspectra.aaindex import drop_incomplete, load_aaindex
from aaspectra.propgroups import assign_keyword_groups, build_descriptors, ks_normality_filter

records = load_aaindex()
complete = drop_incomplete(records)
print(f"{len(records)} records parsed, {len(complete)} without missing values")

kept = ks_normality_filter(complete, alpha=0.05)
print(f"{len(kept)} pass the Lilliefors normality check at alpha 0.05")

groups = assign_keyword_groups(kept)
for g in groups:
    print(f"  {g.group_id} {g.keyword:22s} {len(g.members):4d} indices")

table = build_descriptors(records)
hyd = next(d for d in table if d.keyword == "hydropathy")
print(f"\nhydropathy descriptor ({100 * hyd.explained_variance:.1f}% of group variance):")
for aa, w in sorted(hyd.weights.items(), key=lambda kv: kv[1]):
    print(f"  {aa}  {w:+7.3f}")

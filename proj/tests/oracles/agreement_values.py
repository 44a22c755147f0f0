"""External-library values frozen in test_annotation.cpp and the acceptance run."""
from scipy import stats
from sklearn.metrics import cohen_kappa_score

rows = [(0.993, 0.990), (0.926, 0.320), (0.982, 0.705), (0.986, 0.690), (0.9903, 0.885)]
x, y = zip(*rows)
print("pearson", repr(stats.pearsonr(x, y)[0]))
print("spearman", repr(stats.spearmanr(x, y)[0]))

print("kappa hand", repr(cohen_kappa_score([1, 1, 2, 2], [1, 2, 1, 2])))
a = [1, 2, 3, 3, 2, 1, 4, 5, 5, 2, 3, 4]
b = [1, 2, 3, 2, 2, 1, 4, 4, 5, 3, 3, 5]
print("kappa mixed", repr(cohen_kappa_score(a, b)))

scales = [(2.94, 1, 3), (2.98, 1, 3), (3.00, 1, 4), (4.00, 1, 5)]
print("quality overall", repr(sum((s - lo) / (hi - lo) for s, lo, hi in scales) / 4))

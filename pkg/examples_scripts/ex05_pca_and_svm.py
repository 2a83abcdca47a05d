"""
=====================================
PCA and the dual linear SVM by itself
=====================================

The numeric building blocks on small random data: explained variance,
back-projection, and the SVM's primal/dual gap at convergence.
"""

# %%
import numpy as np

from framegbv.numeric import back_project, explained_variance_ratio, pca_fit, pca_transform
from framegbv.svm import TrainConfig, dual_objective, primal_objective, svm_predict, svm_train

rng = np.random.default_rng(0)
X = rng.normal(size=(60, 12)) * np.linspace(3, 0.1, 12)
y = np.where(X[:, 0] + 0.5 * rng.normal(size=60) > 0, 1, -1)

pca = pca_fit(X, 5)
ratios, cumulative = explained_variance_ratio(pca)
print("ratios", np.round(ratios, 3), "cumulative", np.round(cumulative[-1], 3))

# %%
Z = pca_transform(pca, X)
model = svm_train(Z, y, TrainConfig(C=1.0, tol=1e-6))
print("converged:", model.converged, "iterations:", model.n_iter)
print("primal", primal_objective(model.w, model.b, Z, y, 1.0, model.sample_weight))
print("dual  ", dual_objective(model.alpha, Z, y))
print("training accuracy", np.mean(svm_predict(model, Z) == y))

# %%
# Weights mapped back to the original twelve columns; column 0 carries
# the label.
scores = back_project(pca, model.w)
print(np.round(scores, 3))

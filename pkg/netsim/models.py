# netsim/models.py
from django.db import models


class ExperimentRow(models.Model):
    """
    One (seed, scheme, budget, metric) measurement recorded by `simulate --record`.
    """
    seed = models.CharField(max_length=20, help_text="Topology seed, or 'mean' for the average over seeds")
    scheme = models.CharField(max_length=20)
    n = models.PositiveIntegerField(help_text="Sensors in the network, base station included")
    sigma = models.PositiveBigIntegerField()
    budget_bytes = models.PositiveIntegerField()
    k = models.PositiveIntegerField()
    metric = models.CharField(max_length=50)
    value = models.FloatField()
    created_at = models.DateTimeField(auto_now_add=True)

    class Meta:
        ordering = ['id']

    @classmethod
    def from_result(cls, row):
        return cls(seed=str(row.seed), scheme=row.scheme, n=row.n, sigma=row.sigma,
                   budget_bytes=row.budget_bytes, k=row.k, metric=row.metric, value=float(row.value))

    def __str__(self):
        return f"{self.scheme} seed={self.seed} budget={self.budget_bytes}: {self.metric}={self.value:g}"

# netsim/serializers.py
from rest_framework import serializers
from .models import ExperimentRow


class ExperimentRowSerializer(serializers.ModelSerializer):
    class Meta:
        model = ExperimentRow
        fields = ['id', 'seed', 'scheme', 'n', 'sigma', 'budget_bytes', 'k', 'metric', 'value', 'created_at']

# netsim/views.py
from rest_framework import generics, permissions

from .models import ExperimentRow
from .serializers import ExperimentRowSerializer


class ExperimentRowListView(generics.ListAPIView):
    """
    Recorded experiment rows. Narrow with ?scheme=, ?metric=, ?seed= and ?budget=.
    """
    serializer_class = ExperimentRowSerializer
    permission_classes = [permissions.AllowAny]

    def get_queryset(self):
        queryset = ExperimentRow.objects.all()
        params = self.request.query_params
        for param, field in (('scheme', 'scheme'), ('metric', 'metric'), ('seed', 'seed')):
            if params.get(param):
                queryset = queryset.filter(**{field: params[param]})
        budget = params.get('budget')
        if budget and budget.isdigit():
            queryset = queryset.filter(budget_bytes=int(budget))
        return queryset

# netsim/urls.py
from django.urls import path
from .views import ExperimentRowListView

urlpatterns = [
    path('', ExperimentRowListView.as_view(), name='experiment-list'),
]

# digests/urls.py
from django.urls import path
from .views import DigestQueryView

urlpatterns = [
    path('query/', DigestQueryView.as_view(), name='digest-query'),
]

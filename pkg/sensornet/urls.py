"""
URL configuration for sensornet project.

The `urlpatterns` list routes URLs to views. For more information please see:
    https://docs.djangoproject.com/en/5.2/topics/http/urls/
"""
from django.contrib import admin
from django.urls import path, include

urlpatterns = [
    path('admin/', admin.site.urls),
    path('api/digests/', include('digests.urls')),
    path('api/experiments/', include('netsim.urls')),
    path('api-auth/', include('rest_framework.urls')),
]

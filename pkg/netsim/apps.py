from django.apps import AppConfig


class NetsimConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'netsim'
    verbose_name = 'Sensor network simulation'

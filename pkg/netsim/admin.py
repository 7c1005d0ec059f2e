from django.contrib import admin

from .models import ExperimentRow


@admin.register(ExperimentRow)
class ExperimentRowAdmin(admin.ModelAdmin):
    list_display = ('seed', 'scheme', 'budget_bytes', 'k', 'metric', 'value', 'created_at')
    list_filter = ('scheme', 'metric', 'budget_bytes')

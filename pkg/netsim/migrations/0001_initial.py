# Generated by Django 5.2.5 on 2026-10-17 09:00

from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = [
    ]

    operations = [
        migrations.CreateModel(
            name='ExperimentRow',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('seed', models.CharField(help_text="Topology seed, or 'mean' for the average over seeds", max_length=20)),
                ('scheme', models.CharField(max_length=20)),
                ('n', models.PositiveIntegerField(help_text='Sensors in the network, base station included')),
                ('sigma', models.PositiveBigIntegerField()),
                ('budget_bytes', models.PositiveIntegerField()),
                ('k', models.PositiveIntegerField()),
                ('metric', models.CharField(max_length=50)),
                ('value', models.FloatField()),
                ('created_at', models.DateTimeField(auto_now_add=True)),
            ],
            options={
                'ordering': ['id'],
            },
        ),
    ]

# Generated by Django 5.1.6

import django.db.models.deletion
from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = [
    ]

    operations = [
        migrations.CreateModel(
            name='SweepRun',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('label', models.CharField(max_length=200, verbose_name='批次说明')),
                ('games', models.PositiveIntegerField(default=0, verbose_name='博弈数量')),
                ('passed', models.BooleanField(default=True, verbose_name='是否通过')),
                ('failure_count', models.PositiveIntegerField(default=0, verbose_name='反例数量')),
                ('summary', models.JSONField(verbose_name='汇总')),
                ('created_at', models.DateTimeField(auto_now_add=True, verbose_name='创建时间')),
            ],
            options={
                'verbose_name': '验证批次',
                'verbose_name_plural': '验证批次',
                'ordering': ['-created_at'],
            },
        ),
        migrations.CreateModel(
            name='CheckFailure',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('check_name', models.CharField(max_length=50, verbose_name='检查项')),
                ('digest', models.CharField(max_length=40, verbose_name='博弈摘要')),
                ('location', models.CharField(max_length=200, verbose_name='位置')),
                ('detail', models.TextField(verbose_name='详情')),
                ('game_text', models.TextField(blank=True, default='', verbose_name='博弈 JSON')),
                ('run', models.ForeignKey(on_delete=django.db.models.deletion.CASCADE, related_name='failures', to='verification.sweeprun', verbose_name='所属批次')),
            ],
            options={
                'verbose_name': '检查反例',
                'verbose_name_plural': '检查反例',
                'ordering': ['run', 'check_name', 'id'],
            },
        ),
    ]

from django.db import models


class SweepRun(models.Model):
    """验证批次记录"""

    label = models.CharField(max_length=200, verbose_name='批次说明')
    games = models.PositiveIntegerField(default=0, verbose_name='博弈数量')
    passed = models.BooleanField(default=True, verbose_name='是否通过')
    failure_count = models.PositiveIntegerField(default=0, verbose_name='反例数量')

    # 机器可读的汇总，与 verify --report 写出的 JSON 相同
    summary = models.JSONField(verbose_name='汇总')

    created_at = models.DateTimeField(auto_now_add=True, verbose_name='创建时间')

    class Meta:
        verbose_name = '验证批次'
        verbose_name_plural = '验证批次'
        ordering = ['-created_at']

    def __str__(self):
        status = 'PASS' if self.passed else 'FAIL'
        return f"{self.label} - {status}"


class CheckFailure(models.Model):
    """检查失败的反例"""

    run = models.ForeignKey(SweepRun, on_delete=models.CASCADE, related_name='failures', verbose_name='所属批次')
    check_name = models.CharField(max_length=50, verbose_name='检查项')
    digest = models.CharField(max_length=40, verbose_name='博弈摘要')
    location = models.CharField(max_length=200, verbose_name='位置')
    detail = models.TextField(verbose_name='详情')
    game_text = models.TextField(blank=True, default='', verbose_name='博弈 JSON')

    class Meta:
        verbose_name = '检查反例'
        verbose_name_plural = '检查反例'
        ordering = ['run', 'check_name', 'id']

    def __str__(self):
        return f"{self.check_name} [{self.digest}] {self.location}"

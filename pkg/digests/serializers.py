# digests/serializers.py
import base64
import binascii

from rest_framework import serializers


class FractionField(serializers.FloatField):
    """A float strictly inside (0, 1)."""

    def to_internal_value(self, data):
        value = super().to_internal_value(data)
        if not 0 < value < 1:
            raise serializers.ValidationError('must lie strictly between 0 and 1')
        return value


class DigestQuerySerializer(serializers.Serializer):
    # The digest in its wire encoding, base64 text
    digest = serializers.CharField()
    k = serializers.IntegerField(required=False, min_value=1)
    quantiles = serializers.ListField(child=FractionField(), required=False, default=list)
    ranks = serializers.ListField(child=serializers.IntegerField(min_value=1), required=False, default=list)
    ranges = serializers.ListField(
        child=serializers.ListField(child=serializers.IntegerField(min_value=1), min_length=2, max_length=2),
        required=False,
        default=list,
    )
    consensus = serializers.ListField(child=FractionField(), required=False, default=list)

    def validate_digest(self, value):
        try:
            return base64.b64decode(value, validate=True)
        except (binascii.Error, ValueError):
            raise serializers.ValidationError('digest must be base64 encoded')

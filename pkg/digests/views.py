import logging

from rest_framework import permissions, status
from rest_framework.response import Response
from rest_framework.views import APIView

from .codec import decode
from .exceptions import DigestDecodeError, DigestError
from .query_service import answer_queries
from .serializers import DigestQuerySerializer

logger = logging.getLogger(__name__)


class DigestQueryView(APIView):
    """
    Answers quantile, rank, range and consensus queries from an encoded digest,
    without touching the sensors that produced it.
    """
    permission_classes = [permissions.AllowAny]

    def post(self, request):
        serializer = DigestQuerySerializer(data=request.data)
        if not serializer.is_valid():
            return Response({'success': False, 'error': serializer.errors}, status=status.HTTP_400_BAD_REQUEST)
        data = serializer.validated_data

        try:
            digest = decode(data['digest'], k=data.get('k'))
        except DigestDecodeError as e:
            return Response({'success': False, 'error': str(e), 'field': e.field, 'offset': e.offset},
                            status=status.HTTP_400_BAD_REQUEST)

        try:
            document = answer_queries(
                digest,
                quantiles=data['quantiles'],
                ranks=data['ranks'],
                ranges=[tuple(pair) for pair in data['ranges']],
                consensus=data['consensus'],
            )
        except DigestError as e:
            logger.info('rejected query on n=%d digest: %s', digest.n, e)
            return Response({'success': False, 'error': str(e)}, status=status.HTTP_400_BAD_REQUEST)

        return Response({'success': True, **document})

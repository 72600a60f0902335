from .models import CorefModel, DocumentLoss, Resolution

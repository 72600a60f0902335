from .slates import EPSILON, CandidateSlate, marginal_loss, slate_distribution
from .decode import decode_clusters
from .qa import QaInstance, prepare_qa, qa_slate
from .trainer import Trainer, set_seed

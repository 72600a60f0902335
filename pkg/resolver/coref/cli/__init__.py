from .main import CorefGroup, RunContext, cli, main
from .analysis import build_vocabulary, corpus_words, recall_curve, speaker_ablation, train_strategy

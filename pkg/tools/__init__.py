"""
Pipeline stages: signal sources, preprocessing, coherence, windowing, evaluation and reporting helpers
"""

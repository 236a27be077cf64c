"""
Shared configuration, models, logging and the experiment runner
"""

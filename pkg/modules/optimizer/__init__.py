# modules/optimizer/__init__.py
from .levenberg_marquardt import (LMConfig, LinearSystem, Snapshot, apply_step, build_linear_system,
                                  initialize_damping, levenberg_marquardt, predicted_decrease,
                                  restore_snapshot, take_snapshot, update_damping)
from .report import IterationRecord, MemoryAccount, SolveReport, account_memory

# config/settings.py

APP_CONFIG = {
    'title': 'Graph Optimization Bench',
    'version': '1.0.0',
    'icon': '📐',
    'modules': {
        'circle': {
            'name': 'Circle Toy',
            'icon': '⭕',
            'enabled': True,
            'description': 'Fit noisy 2D points onto a circle of known radius'
        },
        'bal': {
            'name': 'Bundle Adjustment',
            'icon': '📷',
            'enabled': True,
            'description': 'Run a BAL problem across precisions and differentiation modes'
        },
        'compare': {
            'name': 'Mode Comparison',
            'icon': '⚖️',
            'enabled': True,
            'description': 'Compare analytic, auto and dynamic Jacobians on one problem'
        }
    }
}

SOLVER_DEFAULTS = {
    'clamp_min': 1e-6,
    'clamp_max': 1e32,
    'pcg': {
        'max_iterations': 50,
        'tolerance': 1e-6,
        'rejection_ratio': 10.0,
        'preconditioner': 'block_jacobi',
        'normalization': 'rhs_unit_norm',
    },
    'lm': {
        'max_iterations': 10,
        'tolerance': 1e-6,
        'level': 0,
        'initial_damping_factor': 1e-4,
        'damping_ceiling': 1e32,
        'gradient_floor': 1e-12,
        'damping_placement': 'scaled',
    },
    # Nielsen gain-ratio schedule
    'damping': {
        'initial_nu': 2.0,
        'min_decrease': 1.0 / 3.0,
    },
    'bal': {
        'max_iterations': 50,
        'pcg_iterations': 10,
    },
    'circle': {
        'num_points': 50,
        'radius': 5.0,
        'noise_sigma': 0.1,
        'seed': 42,
    },
}

"""
Settings, scenario configuration and the exception hierarchy
"""

"""
Services Package: scenario runner and snapshot reduction
"""

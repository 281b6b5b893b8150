# API Package for the Network Booster Planner

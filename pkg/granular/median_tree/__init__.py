from granular.median_tree.plan import TreePlan, median, median_target, plan, root_cdf, tree_median, tree_median_array
__all__ = ['TreePlan', 'median', 'median_target', 'plan', 'root_cdf', 'tree_median', 'tree_median_array']

from abc import ABC, abstractmethod


class MlbStrategy(ABC):
    """Controller interface driven by the experiment loop, once per time step."""

    name = "base"
    learns = False

    def on_recluster(self, env, assignment):
        """Called at every stage boundary with the new top-layer ClusterAssignment."""

    @abstractmethod
    def act(self, env):
        """
        Input: the UdnEnvironment about to be stepped
        Output: CioMatrix for the whole network (antisymmetric, within bounds)
        """

    def observe(self, env, reward, metrics):
        """Called after env.step() with the global reward and StepMetrics."""

    def close(self):
        pass

import logging
from queue import Empty, Queue
from threading import Thread


class CandidatePool:
    """
    Valuta in parallelo funzioni indipendenti (candidati del setaccio) su thread.

    I risultati vengono riordinati per indice, quindi l'esito non dipende
    dal numero di thread né dall'ordine di completamento.

    Attributes:
        jobs (int): Numero di thread di lavoro.
    """

    def __init__(self, jobs=1):
        self.jobs = max(1, int(jobs))

    def map(self, function, items):
        """
        Applica `function` a ogni elemento, con la semantica di map.

        :return: Lista dei risultati nello stesso ordine di `items`.
        :raises Exception: la prima eccezione (per indice) sollevata da un elemento.
        """
        items = list(items)
        if self.jobs == 1 or len(items) <= 1:
            return [function(item) for item in items]

        task_queue = Queue()
        result_queue = Queue()
        for index, item in enumerate(items):
            task_queue.put((index, item))

        workers = [
            Thread(target=self._worker, args=(function, task_queue, result_queue))
            for _ in range(min(self.jobs, len(items)))
        ]
        for worker in workers:
            worker.start()
        for worker in workers:
            worker.join()

        results = sorted((result_queue.get() for _ in range(len(items))), key=lambda r: r[0])
        for index, _, error in results:
            if error is not None:
                logging.error(f"Errore nella valutazione del candidato {index}: {error}")
                raise error
        logging.debug(f"Valutati {len(items)} candidati con {len(workers)} thread.")
        return [value for _, value, _ in results]

    @staticmethod
    def _worker(function, task_queue, result_queue):
        while True:
            try:
                index, item = task_queue.get_nowait()
            except Empty:
                return
            try:
                result_queue.put((index, function(item), None))
            except Exception as e:
                result_queue.put((index, None, e))
